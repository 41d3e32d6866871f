#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "levelsim/rng.hpp"

namespace levelsim {

// Distinguished value for a blown-up level or an event that never happens.
// Always produced by an explicit branch, never by floating-point overflow.
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Coefficients of the level ODE  du/dt = a u^2 - b u  with death ceiling r.
// A particle at level u gives birth at rate 2 a (r - u).
struct LevelParams {
  double a = 0.0;  // quadratic coefficient, >= 0
  double b = 0.0;  // linear coefficient; b <= r*a
  double r = 1.0;  // level ceiling, > 0

  void validate() const;
};

// Simultaneous-offspring rates: rates[k-1] is the rate coefficient a_k for
// births of k offspring (rate (k+1) a_k (r-u)^k r^{-(k-1)} at level u).
struct OffspringRates {
  std::vector<double> rates;

  bool empty() const { return rates.empty(); }
  double sum_k_ak() const;           // sum_k k a_k   (projected death scale)
  double proposal_rate(double r) const;  // sum_k (k+1) a_k r (thinning bound)
  void validate(double b, double r) const;
};

// Exact solution of du/dt = a u^2 - b u at time dt from u0, or kInf if the
// solution blows up at or before dt. Degenerate cases a=0 and b=0 use their
// own closed forms.
double level_flow(double u0, double dt, const LevelParams& p);

// Time at which the flow from u0 blows up; kInf if it never does.
double level_blowup_time(double u0, const LevelParams& p);

// Smallest t >= 0 with level_flow(u0, t, p) >= target, or kInf if the flow
// stays below target forever. target <= u0 gives 0.
double level_hit_time(double u0, double target, const LevelParams& p);

// Level at time t whose flow blows up exactly at T (requires a > 0; kInf
// otherwise). Ancestors at time t of the infinite-ceiling population alive
// at T are exactly the particles with level below this barrier.
double ancestor_barrier(double T, double t, const LevelParams& p);

// Level at the start of a window of length `horizon` whose flow reaches the
// ceiling r exactly at the end; equals r / survival_denominator. This is the
// finite-r analog of ancestor_barrier and converges to it as r grows.
double ceiling_hit_barrier(double horizon, const LevelParams& p);

// D(t) with per-line survival probability 1/D(t); D(0)=1, nondecreasing.
double survival_denominator(double t, const LevelParams& p);

struct BirthEvent {
  double delay;        // time from now until the birth
  double child_level;  // uniform on [parent level at birth, r)
};

// First birth along the flow started at u0, sampled exactly by thinning with
// dominating rate 2 a r. Returns nullopt if the parent level reaches r first.
std::optional<BirthEvent> next_birth(double u0, const LevelParams& p, RngStream& rng);

// Level drift for the multiple-birth model:
//   sum_k r^2 a_k [ (1-u/r)^{k+1} - 1 + (k+1) u/r ] - b u.
double multi_offspring_drift(double u, const OffspringRates& o, double b, double r);

// Level drift G_r for the exponential-levels model; G_r(0)=0 and
// G_r(z) -> a z^2 - b z as r -> infinity.
double exp_mode_drift(double z, const LevelParams& p);

// One Euler-Maruyama step of dU = (abar U^2 + cbar U) dt + sqrt(2 cbar) U dW,
// clamped at 0. dW is the common Gaussian increment shared by all particles
// in the step.
double env_level_step(double u, double dt, double abar, double cbar, double dW);

// Classical fixed-step RK4 for the variant drifts that have no closed-form
// flow. Step size kRk4Step is small enough that halving it moves hit times
// by far less than 1e-8 (checked in tests).
inline constexpr double kRk4Step = 1e-3;

template <class Drift>
double rk4_step(Drift&& f, double u, double h) {
  double k1 = f(u);
  double k2 = f(u + 0.5 * h * k1);
  double k3 = f(u + 0.5 * h * k2);
  double k4 = f(u + h * k3);
  return u + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

template <class Drift>
double rk4_advance(Drift&& f, double u, double dt, double h = kRk4Step) {
  while (dt > 0.0) {
    double step = dt < h ? dt : h;
    u = rk4_step(f, u, step);
    dt -= step;
  }
  return u;
}

// First time within [0, horizon] at which the RK4 trajectory from u reaches
// `target`, refined by bisection inside the crossing step; kInf if no
// crossing by the horizon.
template <class Drift>
double rk4_hit_time(Drift&& f, double u, double target, double horizon, double h = kRk4Step) {
  if (u >= target) return 0.0;
  double t = 0.0;
  while (t < horizon) {
    double step = (horizon - t) < h ? (horizon - t) : h;
    double next = rk4_step(f, u, step);
    if (next >= target) {
      double lo = 0.0, hi = step;
      for (int it = 0; it < 100 && (hi - lo) > 1e-13; ++it) {
        double mid = 0.5 * (lo + hi);
        if (rk4_step(f, u, mid) >= target)
          hi = mid;
        else
          lo = mid;
      }
      return t + hi;
    }
    u = next;
    t += step;
  }
  return kInf;
}

}  // namespace levelsim
