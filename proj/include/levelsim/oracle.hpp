#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "levelsim/levels.hpp"
#include "levelsim/rng.hpp"
#include "levelsim/stats.hpp"

namespace levelsim {

// Per-individual rates of the projected linear birth-death chain
// (birth r*a, death r*a - b).
struct BDRates {
  double birth_per_individual = 0.0;
  double death_per_individual = 0.0;

  void validate() const;
  static BDRates projected(const LevelParams& p) {
    return {p.r * p.a, p.r * p.a - p.b};
  }
};

using Counts = std::vector<std::int64_t>;

// One reaction of a continuous-time Markov chain on count vectors.
struct Reaction {
  std::function<double(const Counts&)> rate;
  std::function<void(Counts&, RngStream&)> apply;
};

// Exact SSA endpoint. If the event budget is exhausted before t, `overflow`
// is set and the partial state is returned; callers must check it.
struct SsaResult {
  Counts counts;
  bool overflow = false;
};

inline constexpr std::uint64_t kSsaDefaultEventCap = 10'000'000;

SsaResult gillespie_custom(const std::vector<Reaction>& reactions, Counts initial, double t,
                           RngStream& rng, std::uint64_t event_cap = kSsaDefaultEventCap);

// Linear birth-death chain; same SSA core and stream discipline as
// gillespie_custom with the two linear reactions.
SsaResult gillespie_bd(const BDRates& rates, std::int64_t n0, double t, RngStream& rng,
                       std::uint64_t event_cap = kSsaDefaultEventCap);

// Reaction tables for the projected generators of the conditioned and
// variant models; all feed gillespie_custom.
std::vector<Reaction> reactions_bd(const BDRates& rates);
// Conditioned on nonextinction: birth ra(n+1), death (ra-b)(n-1).
std::vector<Reaction> reactions_conditioned_nonextinction(const LevelParams& p);
// Conditioned on extinction: birth (ra-b)n, death ra n.
std::vector<Reaction> reactions_conditioned_extinction(const LevelParams& p);
// Multitype: birth of type j from type i at rate r a(i,j) n_i, death
// (r a(i) - b(i)) n_i; state is the per-type count vector.
std::vector<Reaction> reactions_multitype(const std::vector<std::vector<double>>& a,
                                          const std::vector<double>& b, double r);
// Multiple births: k offspring at rate r a_k n, death (r sum_k k a_k - b) n.
std::vector<Reaction> reactions_multi_offspring(const OffspringRates& o, double b, double r);
// Catastrophes on top of a BD chain: at rate gamma draw a mark and thin the
// population binomially with survival probability 1/rho(mark).
std::vector<Reaction> reactions_bd_with_catastrophe(
    const BDRates& rates, double gamma, const std::vector<std::pair<double, double>>& rho_law);

// P{population alive at t} for n0 initial lines, using the level
// representation: each line survives iff its uniform initial level is below
// r/D(t). Equals the classical BD survival law (asserted in tests).
double survival_prob(std::int64_t n0, double t, const LevelParams& p);

// Classical linear birth-death survival probability from one individual.
double bd_survival_classical(double t, double birth, double death);

struct HarrisParams {
  double p_survive;  // P{W > 0} = b/(ra)
  double exp_rate;   // W | W>0 ~ Exp(b/(ra))
};
HarrisParams harris_params(const LevelParams& p);

struct FellerMoments {
  double mean;
  double variance;
};
// Mean and variance at time t of the Feller diffusion dY = bY dt + sqrt(2aY) dW.
FellerMoments feller_moments(double y0, double t, double a, double b);

// Monte Carlo check of the Poisson identities
//   E[e^{int f dxi}] = e^{int (e^f - 1) dnu},  Var(int f dxi) = int f^2 dnu
// for a finite intensity nu realized as (total mass, atom sampler).
struct IntensityMeasure {
  double total_mass;
  std::function<double(RngStream&)> sample_atom;
};
std::vector<TestReport> poisson_identities_check(const IntensityMeasure& nu,
                                                 const std::function<double(double)>& f,
                                                 double expected_laplace, double expected_var,
                                                 std::size_t reps, RngStream& rng,
                                                 const std::string& name_prefix);

}  // namespace levelsim
