#include "levelsim/oracle.hpp"

#include <cmath>
#include <stdexcept>

namespace levelsim {

void BDRates::validate() const {
  if (!(birth_per_individual >= 0.0) || !(death_per_individual >= 0.0))
    throw std::invalid_argument("BDRates: rates must be >= 0");
}

SsaResult gillespie_custom(const std::vector<Reaction>& reactions, Counts counts, double t,
                           RngStream& rng, std::uint64_t event_cap) {
  if (!(t >= 0.0)) throw std::invalid_argument("gillespie_custom: t must be >= 0");
  double now = 0.0;
  std::vector<double> rates(reactions.size());
  for (std::uint64_t ev = 0; ev < event_cap; ++ev) {
    double total = 0.0;
    for (std::size_t i = 0; i < reactions.size(); ++i) {
      double ri = reactions[i].rate(counts);
      if (!(ri >= 0.0)) throw std::invalid_argument("gillespie_custom: negative rate");
      rates[i] = ri;
      total += ri;
    }
    if (total <= 0.0) return {counts, false};
    now += rng.exponential(total);
    if (now >= t) return {counts, false};
    double pick = rng.uniform() * total;
    std::size_t which = 0;
    double acc = rates[0];
    while (which + 1 < rates.size() && pick >= acc) acc += rates[++which];
    reactions[which].apply(counts, rng);
  }
  return {counts, true};
}

std::vector<Reaction> reactions_bd(const BDRates& rates) {
  rates.validate();
  double lam = rates.birth_per_individual;
  double mu = rates.death_per_individual;
  return {
      {[lam](const Counts& c) { return lam * static_cast<double>(c[0]); },
       [](Counts& c, RngStream&) { ++c[0]; }},
      {[mu](const Counts& c) { return mu * static_cast<double>(c[0]); },
       [](Counts& c, RngStream&) { --c[0]; }},
  };
}

SsaResult gillespie_bd(const BDRates& rates, std::int64_t n0, double t, RngStream& rng,
                       std::uint64_t event_cap) {
  if (n0 < 0) throw std::invalid_argument("gillespie_bd: n0 must be >= 0");
  return gillespie_custom(reactions_bd(rates), Counts{n0}, t, rng, event_cap);
}

std::vector<Reaction> reactions_conditioned_nonextinction(const LevelParams& p) {
  p.validate();
  double ra = p.r * p.a;
  double mu = p.r * p.a - p.b;
  return {
      {[ra](const Counts& c) { return ra * static_cast<double>(c[0] + 1); },
       [](Counts& c, RngStream&) { ++c[0]; }},
      {[mu](const Counts& c) { return mu * static_cast<double>(c[0] - 1); },
       [](Counts& c, RngStream&) { --c[0]; }},
  };
}

std::vector<Reaction> reactions_conditioned_extinction(const LevelParams& p) {
  p.validate();
  if (!(p.b > 0.0 && p.b < p.r * p.a))
    throw std::invalid_argument("reactions_conditioned_extinction: requires 0 < b < r*a");
  return reactions_bd({p.r * p.a - p.b, p.r * p.a});
}

std::vector<Reaction> reactions_multitype(const std::vector<std::vector<double>>& a,
                                          const std::vector<double>& b, double r) {
  std::size_t m = a.size();
  if (m == 0 || b.size() != m) throw std::invalid_argument("reactions_multitype: bad dimensions");
  std::vector<Reaction> out;
  for (std::size_t i = 0; i < m; ++i) {
    if (a[i].size() != m) throw std::invalid_argument("reactions_multitype: bad dimensions");
    double ai = 0.0;
    for (double v : a[i]) ai += v;
    for (std::size_t j = 0; j < m; ++j) {
      double rate = r * a[i][j];
      if (rate == 0.0) continue;
      out.push_back({[rate, i](const Counts& c) { return rate * static_cast<double>(c[i]); },
                     [j](Counts& c, RngStream&) { ++c[j]; }});
    }
    double death = r * ai - b[i];
    if (!(death >= 0.0))
      throw std::invalid_argument("reactions_multitype: requires r*a(i) - b(i) >= 0");
    out.push_back({[death, i](const Counts& c) { return death * static_cast<double>(c[i]); },
                   [i](Counts& c, RngStream&) { --c[i]; }});
  }
  return out;
}

std::vector<Reaction> reactions_multi_offspring(const OffspringRates& o, double b, double r) {
  o.validate(b, r);
  std::vector<Reaction> out;
  for (std::size_t idx = 0; idx < o.rates.size(); ++idx) {
    if (o.rates[idx] == 0.0) continue;
    double rate = r * o.rates[idx];
    std::int64_t k = static_cast<std::int64_t>(idx + 1);
    out.push_back({[rate](const Counts& c) { return rate * static_cast<double>(c[0]); },
                   [k](Counts& c, RngStream&) { c[0] += k; }});
  }
  double death = r * o.sum_k_ak() - b;
  out.push_back({[death](const Counts& c) { return death * static_cast<double>(c[0]); },
                 [](Counts& c, RngStream&) { --c[0]; }});
  return out;
}

std::vector<Reaction> reactions_bd_with_catastrophe(
    const BDRates& rates, double gamma, const std::vector<std::pair<double, double>>& rho_law) {
  if (!(gamma >= 0.0)) throw std::invalid_argument("catastrophe rate must be >= 0");
  auto out = reactions_bd(rates);
  auto law = rho_law;
  out.push_back({[gamma](const Counts&) { return gamma; },
                 [law](Counts& c, RngStream& rng) {
                   double pick = rng.uniform();
                   double rho = law.back().second;
                   double acc = 0.0;
                   for (const auto& pr : law) {
                     acc += pr.first;
                     if (pick < acc) {
                       rho = pr.second;
                       break;
                     }
                   }
                   c[0] = static_cast<std::int64_t>(
                       rng.binomial(static_cast<std::uint64_t>(c[0]), 1.0 / rho));
                 }});
  return out;
}

double survival_prob(std::int64_t n0, double t, const LevelParams& p) {
  if (n0 < 1) throw std::invalid_argument("survival_prob: n0 must be >= 1");
  p.validate();
  double d = survival_denominator(t, p);
  if (d < 1.0) throw std::logic_error("survival_prob: D < 1 cannot happen under b <= r*a");
  return 1.0 - std::pow(1.0 - 1.0 / d, static_cast<double>(n0));
}

double bd_survival_classical(double t, double birth, double death) {
  if (birth == death) return 1.0 / (1.0 + birth * t);
  double e = std::exp((birth - death) * t);
  return 1.0 - death * (e - 1.0) / (birth * e - death);
}

HarrisParams harris_params(const LevelParams& p) {
  p.validate();
  if (!(p.b > 0.0 && p.b < p.r * p.a))
    throw std::invalid_argument("harris_params: requires 0 < b < r*a");
  double v = p.b / (p.r * p.a);
  return {v, v};
}

FellerMoments feller_moments(double y0, double t, double a, double b) {
  if (!(y0 >= 0.0)) throw std::invalid_argument("feller_moments: y0 must be >= 0");
  double m = y0 * std::exp(b * t);
  double v;
  if (b == 0.0)
    v = 2.0 * a * y0 * t;
  else
    v = (2.0 * a * y0 / b) * std::exp(b * t) * (std::exp(b * t) - 1.0);
  return {m, v};
}

std::vector<TestReport> poisson_identities_check(const IntensityMeasure& nu,
                                                 const std::function<double(double)>& f,
                                                 double expected_laplace, double expected_var,
                                                 std::size_t reps, RngStream& rng,
                                                 const std::string& name_prefix) {
  if (!(nu.total_mass >= 0.0)) throw std::invalid_argument("intensity mass must be >= 0");
  std::vector<double> exps(reps), sums(reps);
  for (std::size_t i = 0; i < reps; ++i) {
    std::uint64_t count = rng.poisson(nu.total_mass);
    double s = 0.0;
    for (std::uint64_t j = 0; j < count; ++j) s += f(nu.sample_atom(rng));
    sums[i] = s;
    exps[i] = std::exp(s);
  }
  auto ms = mean_with_se(exps);
  std::vector<TestReport> out;
  out.push_back(z_test(name_prefix + "_laplace", ms.mean, expected_laplace, ms.se, reps));

  // Sample variance of int f dxi against int f^2 dnu, with the standard
  // large-sample SE of a variance estimate sqrt((mu4 - var^2)/n).
  auto mv = mean_with_se(sums);
  double var = 0.0, mu4 = 0.0;
  for (double s : sums) {
    double d = s - mv.mean;
    var += d * d;
    mu4 += d * d * d * d;
  }
  var /= static_cast<double>(reps - 1);
  mu4 /= static_cast<double>(reps);
  double se_var = std::sqrt(std::max(0.0, mu4 - var * var) / static_cast<double>(reps));
  out.push_back(z_test(name_prefix + "_variance", var, expected_var, se_var, reps));
  return out;
}

}  // namespace levelsim
