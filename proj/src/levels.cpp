#include "levelsim/levels.hpp"

#include <cmath>
#include <stdexcept>

namespace levelsim {

void LevelParams::validate() const {
  if (!(a >= 0.0)) throw std::invalid_argument("LevelParams: a must be >= 0");
  if (!(r > 0.0)) throw std::invalid_argument("LevelParams: r must be > 0");
  if (!(r * a - b >= 0.0)) throw std::invalid_argument("LevelParams: requires r*a - b >= 0");
}

double OffspringRates::sum_k_ak() const {
  double s = 0.0;
  for (std::size_t i = 0; i < rates.size(); ++i) s += static_cast<double>(i + 1) * rates[i];
  return s;
}

double OffspringRates::proposal_rate(double r) const {
  double s = 0.0;
  for (std::size_t i = 0; i < rates.size(); ++i) s += static_cast<double>(i + 2) * rates[i] * r;
  return s;
}

void OffspringRates::validate(double b, double r) const {
  if (rates.empty()) throw std::invalid_argument("OffspringRates: no rates given");
  bool any = false;
  for (double v : rates) {
    if (!(v >= 0.0)) throw std::invalid_argument("OffspringRates: rates must be >= 0");
    if (v > 0.0) any = true;
  }
  if (!any) throw std::invalid_argument("OffspringRates: at least one rate must be positive");
  if (!(r * sum_k_ak() - b >= 0.0))
    throw std::invalid_argument("OffspringRates: requires r*sum(k a_k) - b >= 0");
}

double level_flow(double u0, double dt, const LevelParams& p) {
  if (!(u0 >= 0.0)) throw std::invalid_argument("level_flow: u0 must be >= 0");
  if (!(dt >= 0.0)) throw std::invalid_argument("level_flow: dt must be >= 0");
  if (u0 == 0.0) return 0.0;
  if (p.a == 0.0) {
    if (p.b == 0.0) return u0;
    return u0 * std::exp(-p.b * dt);
  }
  if (p.b == 0.0) {
    double den = 1.0 - p.a * u0 * dt;
    return den <= 0.0 ? kInf : u0 / den;
  }
  // u(t) = u0 e^{-bt} / (1 - (a/b) u0 (1 - e^{-bt}))
  double one_minus_e = -std::expm1(-p.b * dt);
  double den = 1.0 - (p.a / p.b) * u0 * one_minus_e;
  if (den <= 0.0) return kInf;
  return u0 * std::exp(-p.b * dt) / den;
}

double level_blowup_time(double u0, const LevelParams& p) {
  if (!(u0 >= 0.0)) throw std::invalid_argument("level_blowup_time: u0 must be >= 0");
  if (p.a == 0.0 || u0 == 0.0) return kInf;
  if (p.b == 0.0) return 1.0 / (p.a * u0);
  double val = 1.0 - p.b / (p.a * u0);
  if (val <= 0.0) return kInf;  // at or below the fixed point b/a
  return -std::log(val) / p.b;
}

double level_hit_time(double u0, double target, const LevelParams& p) {
  if (!(u0 >= 0.0)) throw std::invalid_argument("level_hit_time: u0 must be >= 0");
  if (!(target > 0.0)) throw std::invalid_argument("level_hit_time: target must be > 0");
  if (target <= u0) return 0.0;
  if (u0 == 0.0) return kInf;  // 0 is a fixed point
  if (p.a == 0.0) {
    if (p.b >= 0.0) return kInf;  // constant or decaying
    return std::log(target / u0) / (-p.b);
  }
  if (p.b == 0.0) return (1.0 / u0 - 1.0 / target) / p.a;
  if (p.b > 0.0 && u0 <= p.b / p.a) return kInf;  // flow nonincreasing from u0
  // Invert the closed-form flow: e^{-bt} = target (b - a u0) / (u0 (b - a target)).
  double s = target * (p.b - p.a * u0) / (u0 * (p.b - p.a * target));
  if (!(s > 0.0)) return kInf;
  return -std::log(s) / p.b;
}

double ancestor_barrier(double T, double t, const LevelParams& p) {
  if (!(t >= 0.0 && t < T)) throw std::invalid_argument("ancestor_barrier: requires 0 <= t < T");
  if (p.a == 0.0) return kInf;
  double dt = T - t;
  if (p.b == 0.0) return 1.0 / (p.a * dt);
  return p.b / (p.a * (-std::expm1(-p.b * dt)));
}

double survival_denominator(double t, const LevelParams& p) {
  if (!(t >= 0.0)) throw std::invalid_argument("survival_denominator: t must be >= 0");
  if (p.b == 0.0) return 1.0 + p.a * p.r * t;
  return std::exp(-p.b * t) + (p.r * p.a / p.b) * (-std::expm1(-p.b * t));
}

double ceiling_hit_barrier(double horizon, const LevelParams& p) {
  if (!(horizon > 0.0)) throw std::invalid_argument("ceiling_hit_barrier: horizon must be > 0");
  return p.r / survival_denominator(horizon, p);
}

std::optional<BirthEvent> next_birth(double u0, const LevelParams& p, RngStream& rng) {
  if (!(u0 >= 0.0 && u0 < p.r)) throw std::invalid_argument("next_birth: requires 0 <= u0 < r");
  if (p.a == 0.0) return std::nullopt;
  const double bound = 2.0 * p.a * p.r;
  const double horizon = level_hit_time(u0, p.r, p);
  double t = 0.0;
  for (;;) {
    t += rng.exponential(bound);
    if (t >= horizon) return std::nullopt;
    double u = level_flow(u0, t, p);
    if (rng.uniform() * p.r < p.r - u) {
      double child = u + (p.r - u) * rng.uniform();
      return BirthEvent{t, child};
    }
  }
}

double multi_offspring_drift(double u, const OffspringRates& o, double b, double r) {
  if (!(u >= 0.0 && u <= r)) throw std::invalid_argument("multi_offspring_drift: requires 0 <= u <= r");
  double frac = u / r;
  double s = 0.0;
  for (std::size_t i = 0; i < o.rates.size(); ++i) {
    if (o.rates[i] == 0.0) continue;
    double k = static_cast<double>(i + 1);
    s += r * r * o.rates[i] * (std::pow(1.0 - frac, k + 1.0) - 1.0 + (k + 1.0) * frac);
  }
  return s - b * u;
}

double exp_mode_drift(double z, const LevelParams& p) {
  if (!(z >= 0.0)) throw std::invalid_argument("exp_mode_drift: z must be >= 0");
  // e^{-z/r} G_r(z) = a r^2 (1-e^{-z/r})^2 - b r (1-e^{-z/r})
  double w = -std::expm1(-z / p.r);  // 1 - e^{-z/r}
  return std::exp(z / p.r) * p.r * w * (p.a * p.r * w - p.b);
}

double env_level_step(double u, double dt, double abar, double cbar, double dW) {
  if (!(u >= 0.0)) throw std::invalid_argument("env_level_step: u must be >= 0");
  if (!(dt > 0.0)) throw std::invalid_argument("env_level_step: dt must be > 0");
  if (!(cbar >= 0.0)) throw std::invalid_argument("env_level_step: cbar must be >= 0");
  double next = u + (abar * u * u + cbar * u) * dt + std::sqrt(2.0 * cbar) * u * dW;
  return next < 0.0 ? 0.0 : next;
}

}  // namespace levelsim
