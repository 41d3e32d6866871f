#include "levelsim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace levelsim {

std::string TestReport::csv_header() { return "name,statistic,p_value,threshold,pass,n"; }

std::string TestReport::csv_row() const {
  char buf[256];
  std::string ns;
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (i) ns += '|';
    ns += std::to_string(n[i]);
  }
  std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%s,%s", name.c_str(), statistic,
                p_value, threshold, pass ? "true" : "false", ns.c_str());
  return buf;
}

double kolmogorov_sf(double lambda) {
  if (lambda <= 0.0) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 200; ++k) {
    double term = 2.0 * std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    sign = -sign;
    if (term < 1e-12 && k >= 25) break;
  }
  return std::min(1.0, std::max(0.0, sum));
}

namespace {

double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < 1000; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_contfrac(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 1000; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_q: bad arguments");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_contfrac(a, x);
}

double normal_sf(double z) { return 0.5 * std::erfc(z / 1.4142135623730951); }

TestReport ks_test(const std::string& name, std::vector<double> sample,
                   const std::function<double(double)>& cdf, double threshold) {
  if (sample.empty()) throw std::invalid_argument("ks_test: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    double f = cdf(sample[i]);
    double hi = (static_cast<double>(i) + 1.0) / n - f;
    double lo = f - static_cast<double>(i) / n;
    d = std::max(d, std::max(hi, lo));
  }
  double sqn = std::sqrt(n);
  double lambda = (sqn + 0.12 + 0.11 / sqn) * d;
  TestReport rep;
  rep.name = name;
  rep.statistic = d;
  rep.p_value = kolmogorov_sf(lambda);
  rep.threshold = threshold;
  rep.pass = rep.p_value > threshold;
  rep.n = {sample.size()};
  return rep;
}

TestReport chi_square_two_sample(const std::string& name,
                                 const std::vector<std::int64_t>& counts_a,
                                 const std::vector<std::int64_t>& counts_b,
                                 double threshold) {
  std::size_t bins = std::max(counts_a.size(), counts_b.size());
  auto at = [](const std::vector<std::int64_t>& v, std::size_t i) -> double {
    return i < v.size() ? static_cast<double>(v[i]) : 0.0;
  };
  double na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < bins; ++i) {
    na += at(counts_a, i);
    nb += at(counts_b, i);
  }
  if (na <= 0.0 || nb <= 0.0) throw std::invalid_argument("chi_square_two_sample: empty histogram");
  // Pooled-count requirement so that both expected columns are >= 5.
  const double need = 5.0 * (na + nb) / std::min(na, nb);
  std::vector<double> ma, mb;
  double acc_a = 0.0, acc_b = 0.0;
  for (std::size_t i = 0; i < bins; ++i) {
    acc_a += at(counts_a, i);
    acc_b += at(counts_b, i);
    if (acc_a + acc_b >= need) {
      ma.push_back(acc_a);
      mb.push_back(acc_b);
      acc_a = acc_b = 0.0;
    }
  }
  if (acc_a + acc_b > 0.0) {
    if (ma.empty()) {
      ma.push_back(acc_a);
      mb.push_back(acc_b);
    } else {
      ma.back() += acc_a;
      mb.back() += acc_b;
    }
  }
  if (ma.size() < 2) throw std::invalid_argument("chi_square_two_sample: fewer than 2 merged bins");
  double stat = 0.0;
  for (std::size_t i = 0; i < ma.size(); ++i) {
    double pooled = ma[i] + mb[i];
    double ea = na * pooled / (na + nb);
    double eb = nb * pooled / (na + nb);
    stat += (ma[i] - ea) * (ma[i] - ea) / ea + (mb[i] - eb) * (mb[i] - eb) / eb;
  }
  double df = static_cast<double>(ma.size() - 1);
  TestReport rep;
  rep.name = name;
  rep.statistic = stat;
  rep.p_value = gamma_q(df / 2.0, stat / 2.0);
  rep.threshold = threshold;
  rep.pass = rep.p_value > threshold;
  rep.n = {static_cast<std::size_t>(na), static_cast<std::size_t>(nb)};
  return rep;
}

TestReport z_test(const std::string& name, double estimate, double truth, double se,
                  std::size_t n, double threshold) {
  TestReport rep;
  rep.name = name;
  double z = se > 0.0 ? std::fabs(estimate - truth) / se
                      : (estimate == truth ? 0.0 : 1e300);
  rep.statistic = z;
  rep.p_value = 2.0 * normal_sf(z);
  rep.threshold = threshold;
  rep.pass = rep.p_value > threshold;
  rep.n = {n};
  return rep;
}

MeanSe mean_with_se(const std::vector<double>& sample) {
  if (sample.empty()) throw std::invalid_argument("mean_with_se: empty sample");
  double mean = 0.0;
  for (double v : sample) mean += v;
  mean /= static_cast<double>(sample.size());
  if (sample.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double v : sample) ss += (v - mean) * (v - mean);
  double var = ss / static_cast<double>(sample.size() - 1);
  return {mean, std::sqrt(var / static_cast<double>(sample.size()))};
}

Interval binomial_ci(std::uint64_t successes, std::uint64_t trials, double z) {
  if (trials == 0) throw std::invalid_argument("binomial_ci: zero trials");
  double p = static_cast<double>(successes) / static_cast<double>(trials);
  double half = z * std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
  return {std::max(0.0, p - half), std::min(1.0, p + half)};
}

std::vector<std::int64_t> int_histogram(const std::vector<std::int64_t>& values) {
  std::int64_t mx = 0;
  for (auto v : values) {
    if (v < 0) throw std::invalid_argument("int_histogram: negative value");
    mx = std::max(mx, v);
  }
  std::vector<std::int64_t> h(static_cast<std::size_t>(mx) + 1, 0);
  for (auto v : values) ++h[static_cast<std::size_t>(v)];
  return h;
}

}  // namespace levelsim
