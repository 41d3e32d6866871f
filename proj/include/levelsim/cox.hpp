#pragma once

#include <functional>
#include <vector>

#include "levelsim/rng.hpp"

namespace levelsim {

// A conditionally Poisson point configuration on marks x [0, window]:
// given the Cox mass m, the points form a Poisson process of intensity m
// per unit level, with marks i.i.d. from the mark law.
struct PointConfig {
  struct Point {
    double mark;
    double level;
  };
  std::vector<Point> points;
  double window = 0.0;
};

PointConfig sample_cox(const std::function<double(RngStream&)>& mass_sampler,
                       const std::function<double(RngStream&)>& mark_sampler, double window,
                       RngStream& rng);

// (1/K) sum f(mark) over points; conditionally unbiased for Xi(f).
double estimate_cox(const PointConfig& cfg, const std::function<double(double)>& f);

// Chebyshev bound on P{|estimate - truth| >= delta}:
//   conditionally Poisson:  C/(K delta^2) + tail
//   uniform levels on [0,r]: (r-K) C / (r K delta^2) + tail
// where `tail` bounds P{int f^2 dXi > C}. Clamped to [0,1].
double estimator_bound(double delta, double c, double window, double tail, bool uniform_mode,
                       double r = 0.0);

}  // namespace levelsim
