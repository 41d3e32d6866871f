#include <cmath>

#include "doctest.h"
#include "levelsim/rng.hpp"
#include "levelsim/stats.hpp"

using namespace levelsim;

TEST_CASE("ks statistic bounds and degenerate samples") {
  auto unif = [](double x) { return x < 0 ? 0.0 : (x > 1 ? 1.0 : x); };
  auto rep = ks_test("const", std::vector<double>(100, 0.5), unif);
  CHECK(rep.statistic >= 0.5);
  CHECK(rep.p_value < 1e-9);
  CHECK(!rep.pass);

  RngStream rng(3, 0, 0);
  std::vector<double> xs(10000);
  for (auto& x : xs) x = rng.uniform();
  auto rep2 = ks_test("unif", xs, unif);
  CHECK(rep2.statistic >= 0.0);
  CHECK(rep2.statistic <= 1.0);
  CHECK(rep2.pass);
  CHECK_THROWS(ks_test("empty", {}, unif));
}

TEST_CASE("ks p-values are calibrated under the null") {
  // 200 seeds of 10^4 uniforms each; the p-values should themselves be
  // uniform, and the fraction below 0.05 should be near 0.05.
  std::vector<double> pvals;
  int below = 0;
  for (int seed = 0; seed < 200; ++seed) {
    RngStream rng(1000 + seed, 0, 0);
    std::vector<double> xs(10000);
    for (auto& x : xs) x = rng.uniform();
    auto rep = ks_test("cal", xs, [](double x) { return x; });
    pvals.push_back(rep.p_value);
    if (rep.p_value < 0.05) ++below;
  }
  auto meta = ks_test("ks_on_p", pvals, [](double x) { return x < 0 ? 0.0 : (x > 1 ? 1.0 : x); });
  CHECK(meta.pass);
  double se = std::sqrt(0.05 * 0.95 / 200.0);
  CHECK(std::fabs(below / 200.0 - 0.05) < 3.0 * se + 1e-12);
}

TEST_CASE("chi-square two-sample basics") {
  std::vector<std::int64_t> h(10, 100);
  auto rep = chi_square_two_sample("identical", h, h);
  CHECK(rep.statistic == doctest::Approx(0.0));
  CHECK(rep.p_value == doctest::Approx(1.0));
  CHECK(rep.pass);
  CHECK_THROWS(chi_square_two_sample("empty", {0, 0}, {0, 0}));
}

TEST_CASE("chi-square calibration and power") {
  auto poisson_hist = [](double mean, int reps, std::uint64_t seed) {
    RngStream rng(seed, 0, 0);
    std::vector<std::int64_t> vals(reps);
    for (auto& v : vals) v = static_cast<std::int64_t>(rng.poisson(mean));
    return int_histogram(vals);
  };
  std::vector<double> pvals;
  for (int seed = 0; seed < 200; ++seed) {
    auto a = poisson_hist(5.0, 10000, 2 * seed + 17);
    auto b = poisson_hist(5.0, 10000, 2 * seed + 18);
    pvals.push_back(chi_square_two_sample("cal", a, b).p_value);
  }
  auto meta = ks_test("chi2_on_p", pvals, [](double x) { return x < 0 ? 0.0 : (x > 1 ? 1.0 : x); });
  CHECK(meta.pass);

  auto a = poisson_hist(5.0, 10000, 900);
  auto b = poisson_hist(8.0, 10000, 901);
  auto rep = chi_square_two_sample("power", a, b);
  CHECK(rep.p_value < 1e-6);
}

TEST_CASE("mean/se and binomial ci") {
  auto ms = mean_with_se({2.0, 2.0, 2.0});
  CHECK(ms.mean == doctest::Approx(2.0));
  CHECK(ms.se == doctest::Approx(0.0));

  auto iv = binomial_ci(0, 100, 3.0);
  CHECK(iv.lo == doctest::Approx(0.0));
  auto iv2 = binomial_ci(500, 1000, 3.0);
  CHECK(iv2.lo == doctest::Approx(0.5 - 3.0 * std::sqrt(0.25 / 1000.0)));
  CHECK(iv2.hi == doctest::Approx(0.5 + 3.0 * std::sqrt(0.25 / 1000.0)));
  CHECK_THROWS(binomial_ci(0, 0, 3.0));
}

TEST_CASE("gamma_q against pinned references") {
  // chi2.sf(12.5, 7) and gammaincc(3.5, 6.25) agree by definition.
  CHECK(gamma_q(3.5, 6.25) == doctest::Approx(0.08526927515826925).epsilon(1e-10));
  CHECK(gamma_q(1.0, 0.0) == doctest::Approx(1.0));
}

TEST_CASE("report csv row shape") {
  TestReport rep{"demo", 1.5, 0.5, 0.001, true, {10, 20}};
  CHECK(rep.csv_row() == "demo,1.5,0.5,0.001,true,10|20");
}
