#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "levelsim/rng.hpp"

namespace levelsim {

struct Model;  // engine.hpp

// Poisson immigration: arrivals in time at total rate r * total_rate_density
// (the level coordinate of the space-time-level intensity nu x Lebesgue
// integrates to r), levels uniform on [0,r), locations from the sampler.
struct ImmigrationSpec {
  double total_rate_density = 0.0;  // nu(E)
  std::function<void(RngStream&, std::vector<double>&)> location_sampler;  // optional

  void validate() const;
};

// Multitype branching: a type-i particle gives birth to a type-j particle at
// rate r a(i,j) per unit (r - level); per-type level drift a(i) u^2 - b(i) u.
struct MultitypeSpec {
  std::vector<std::vector<double>> a;  // m x m, nonnegative
  std::vector<double> b;               // length m

  std::size_t m() const { return b.size(); }
  double a_of(std::size_t type) const;
  double max_a() const;
  void validate(double r) const;  // irreducibility and r a(i) - b(i) >= 0
};

// Outcome of one multitype birth event with the level-assignment
// randomization: the parent keeps its type but may take the new level.
struct MultitypeBirth {
  double parent_level;
  int child_type;
  double child_level;
  bool swapped;
};
// parent at (type, level u), new level v ~ U[u, r); with probability 1/2 the
// parent keeps u and the child takes v, otherwise they swap.
MultitypeBirth multitype_birth(int parent_type, double parent_level, const MultitypeSpec& spec,
                               double r, RngStream& rng);

// Catastrophic death: at rate event_rate draw a mark; every living level is
// multiplied by rho >= 1 (constant or per-type), levels crossing the ceiling
// die simultaneously.
struct CatastropheSpec {
  struct Mark {
    double prob;
    double rho;                       // used when rho_by_type is empty
    std::vector<double> rho_by_type;  // optional per-type table
  };
  double event_rate = 0.0;  // gamma(V), finite
  std::vector<Mark> marks;

  void validate() const;
  const Mark& draw_mark(RngStream& rng) const;
};

// Branching in a random environment: a finite chain with generator Q run at
// speed `speedup` modulates (a(l), b(l)). Limit mode drives all levels with
// the common-noise SDE using the derived abar, cbar.
struct EnvironmentSpec {
  std::vector<std::vector<double>> q;  // generator matrix (rows sum to 0)
  std::vector<double> a, b;            // per-state coefficients
  double speedup = 1.0;                // the r in xi(rt)
  bool limit_mode = false;
  double lambda_max = 0.0;  // level ceiling in limit mode
  double grid_step = 1e-3;  // Euler step in limit mode

  std::size_t m() const { return a.size(); }
  void validate() const;  // sum_l pi(l) b(l) = 0 within 1e-12, cbar >= 0

  std::vector<double> stationary() const;  // pi with pi Q = 0, sum pi = 1
  std::vector<double> h0() const;          // a solution of Q h0 = b
  double abar() const;                     // sum pi(l) a(l)
  double cbar() const;                     // -sum pi(l) h0(l) b(l)
};

// Solve the m x m system M x = y by Gaussian elimination with partial
// pivoting (used for pi and h0; singular generator rows are handled by the
// callers via the usual normalization trick).
std::vector<double> solve_linear(std::vector<std::vector<double>> m, std::vector<double> y);

// Configuration transforms (Model defined in engine.hpp).
// Adds the immortal level-zero particle; requires b <= 0 at finite r.
Model condition_nonextinction(const Model& base);
// Reparameterizes to (a, -b, r - b/a) on shifted levels; requires 0 < b < ra.
Model condition_extinction(const Model& base);

}  // namespace levelsim
