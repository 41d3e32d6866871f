#include "levelsim/cox.hpp"

#include <algorithm>
#include <stdexcept>

namespace levelsim {

PointConfig sample_cox(const std::function<double(RngStream&)>& mass_sampler,
                       const std::function<double(RngStream&)>& mark_sampler, double window,
                       RngStream& rng) {
  if (!(window > 0.0)) throw std::invalid_argument("sample_cox: window must be > 0");
  double m = mass_sampler(rng);
  if (!(m >= 0.0)) throw std::invalid_argument("sample_cox: Cox mass must be >= 0");
  PointConfig cfg;
  cfg.window = window;
  std::uint64_t count = rng.poisson(m * window);
  cfg.points.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    double level = rng.uniform(0.0, window);
    cfg.points.push_back({mark_sampler(rng), level});
  }
  return cfg;
}

double estimate_cox(const PointConfig& cfg, const std::function<double(double)>& f) {
  if (!(cfg.window > 0.0)) throw std::invalid_argument("estimate_cox: window must be > 0");
  double s = 0.0;
  for (const auto& pt : cfg.points) s += f(pt.mark);
  return s / cfg.window;
}

double estimator_bound(double delta, double c, double window, double tail, bool uniform_mode,
                       double r) {
  if (!(delta > 0.0 && c > 0.0 && window > 0.0 && tail >= 0.0))
    throw std::invalid_argument("estimator_bound: arguments must be positive");
  double cheb;
  if (uniform_mode) {
    if (!(r > 0.0 && window <= r))
      throw std::invalid_argument("estimator_bound: uniform mode needs 0 < K <= r");
    cheb = (r - window) * c / (r * window * delta * delta);
  } else {
    cheb = c / (window * delta * delta);
  }
  return std::min(1.0, cheb + tail);
}

}  // namespace levelsim
