#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace levelsim {

// Outcome of one named statistical check. `pass` is always p_value > threshold.
struct TestReport {
  std::string name;
  double statistic = 0.0;
  double p_value = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::vector<std::size_t> n;

  // One CSV row: name,statistic,p_value,threshold,pass,n
  std::string csv_row() const;
  static std::string csv_header();
};

inline constexpr double kDefaultPThreshold = 0.001;
// Two-sided normal p at |z| = 3; used for "within 3 standard errors" checks.
inline constexpr double kThreeSigmaP = 0.0026997960632601866;

// Upper tail of the Kolmogorov distribution, Q(lambda) = 2*sum (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_sf(double lambda);

// Regularized incomplete gamma Q(a,x) (series + continued fraction).
double gamma_q(double a, double x);

// Standard normal survival function.
double normal_sf(double z);

// One-sample Kolmogorov-Smirnov against a supplied CDF, asymptotic p-value.
TestReport ks_test(const std::string& name, std::vector<double> sample,
                   const std::function<double(double)>& cdf,
                   double threshold = kDefaultPThreshold);

// Two-sample chi-square on integer histograms over shared bins. Adjacent bins
// are merged until every pooled bin has expected count >= 5 under both
// samples; df = merged bins - 1.
TestReport chi_square_two_sample(const std::string& name,
                                 const std::vector<std::int64_t>& counts_a,
                                 const std::vector<std::int64_t>& counts_b,
                                 double threshold = kDefaultPThreshold);

// Z-test of an estimate against a known truth; p-value is two-sided normal.
// With the default threshold, pass means |estimate - truth| < 3 se.
TestReport z_test(const std::string& name, double estimate, double truth,
                  double se, std::size_t n, double threshold = kThreeSigmaP);

struct MeanSe {
  double mean;
  double se;
};
MeanSe mean_with_se(const std::vector<double>& sample);

struct Interval {
  double lo;
  double hi;
};
// Normal-approximation binomial CI, clamped to [0,1].
Interval binomial_ci(std::uint64_t successes, std::uint64_t trials, double z);

// Histogram of nonnegative integer observations (index = value).
std::vector<std::int64_t> int_histogram(const std::vector<std::int64_t>& values);

}  // namespace levelsim
