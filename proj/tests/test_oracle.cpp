#include <cmath>

#include "doctest.h"
#include "levelsim/oracle.hpp"

using namespace levelsim;

TEST_CASE("gillespie_bd absorbing state and mean growth") {
  RngStream rng(1, 0, 0);
  auto res = gillespie_bd({1.0, 0.5}, 0, 5.0, rng);
  CHECK(res.counts[0] == 0);
  CHECK(!res.overflow);

  // E[N(t)] = n0 e^{(lambda-mu) t}
  const double lam = 1.0, mu = 0.5, t = 1.0;
  const int n0 = 5, reps = 20000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < reps; ++i) {
    RngStream r(2, static_cast<std::uint64_t>(i), 0);
    double n = static_cast<double>(gillespie_bd({lam, mu}, n0, t, r).counts[0]);
    sum += n;
    sum2 += n * n;
  }
  double mean = sum / reps;
  double se = std::sqrt((sum2 / reps - mean * mean) / reps);
  CHECK(std::fabs(mean - n0 * std::exp((lam - mu) * t)) < 3.0 * se);
}

TEST_CASE("gillespie_bd extinction frequency matches survival_prob complement") {
  LevelParams p{1.0, -1.0, 1.0};  // lambda = ra = 1, mu = ra - b = 2
  const double t = 1.0;
  const int reps = 200000;
  int extinct = 0;
  for (int i = 0; i < reps; ++i) {
    RngStream r(3, static_cast<std::uint64_t>(i), 0);
    if (gillespie_bd(BDRates::projected(p), 1, t, r).counts[0] == 0) ++extinct;
  }
  double p_surv = survival_prob(1, t, p);
  CHECK(p_surv == doctest::Approx(1.0 / (2.0 * std::exp(1.0) - 1.0)).epsilon(1e-12));
  double freq = 1.0 - static_cast<double>(extinct) / reps;
  double se = std::sqrt(p_surv * (1.0 - p_surv) / reps);
  CHECK(std::fabs(freq - p_surv) < 3.0 * se);
}

TEST_CASE("gillespie_custom with constant rates reproduces gillespie_bd bitwise") {
  BDRates rates{0.9, 0.7};
  for (int i = 0; i < 50; ++i) {
    RngStream r1(4, static_cast<std::uint64_t>(i), 0);
    RngStream r2(4, static_cast<std::uint64_t>(i), 0);
    auto a = gillespie_bd(rates, 4, 2.0, r1);
    auto b = gillespie_custom(reactions_bd(rates), {4}, 2.0, r2);
    CHECK(a.counts[0] == b.counts[0]);
  }
}

TEST_CASE("conditioned-on-nonextinction chain never dies from n=1") {
  LevelParams p{1.0, -0.5, 1.0};
  auto rx = reactions_conditioned_nonextinction(p);
  for (int i = 0; i < 2000; ++i) {
    RngStream r(5, static_cast<std::uint64_t>(i), 0);
    auto res = gillespie_custom(rx, {1}, 2.0, r);
    CHECK(res.counts[0] >= 1);
  }
}

TEST_CASE("symmetric 2-type multitype lumps to a single-type chain") {
  // a(i,j) = a/2 for all i,j and b(i) = b: the total count is the plain BD
  // chain with birth ra and death ra - b.
  const double a = 1.0, b = 0.4, r = 1.0, t = 1.0;
  std::vector<std::vector<double>> amat{{a / 2, a / 2}, {a / 2, a / 2}};
  std::vector<double> bvec{b, b};
  auto rx = reactions_multitype(amat, bvec, r);
  const int reps = 10000;
  std::vector<std::int64_t> totals, singles;
  for (int i = 0; i < reps; ++i) {
    RngStream r1(6, static_cast<std::uint64_t>(i), 0);
    auto res = gillespie_custom(rx, {3, 2}, t, r1);
    totals.push_back(res.counts[0] + res.counts[1]);
    RngStream r2(7, static_cast<std::uint64_t>(i), 0);
    singles.push_back(gillespie_bd({r * a, r * a - b}, 5, t, r2).counts[0]);
  }
  auto rep = chi_square_two_sample("multitype_lumped", int_histogram(totals),
                                   int_histogram(singles));
  CHECK(rep.pass);
}

TEST_CASE("ssa event cap reports overflow explicitly") {
  RngStream rng(8, 0, 0);
  auto res = gillespie_bd({50.0, 0.0}, 10, 100.0, rng, 200);
  CHECK(res.overflow);
}

TEST_CASE("survival_prob pinned values and monotonicity") {
  LevelParams p{1.0, -1.0, 1.0};
  CHECK(survival_prob(1, 0.0, p) == doctest::Approx(1.0));
  CHECK(survival_prob(7, 0.0, p) == doctest::Approx(1.0));
  double prev = 1.0;
  for (double t : {0.25, 0.5, 1.0, 2.0, 4.0}) {
    double v = survival_prob(1, t, p);
    CHECK(v < prev);
    prev = v;
  }
  CHECK(survival_prob(2, 1.0, p) > survival_prob(1, 1.0, p));
  CHECK_THROWS_AS(survival_prob(0, 1.0, p), std::invalid_argument);
}

TEST_CASE("survival_prob equals the classical BD survival law") {
  RngStream rng(9, 0, 0);
  for (int i = 0; i < 200; ++i) {
    double a = rng.uniform(0.1, 2.0);
    double r = rng.uniform(0.5, 3.0);
    double b = rng.uniform(-2.0, r * a);
    double t = rng.uniform(0.01, 3.0);
    LevelParams p{a, b, r};
    double mine = survival_prob(1, t, p);
    double classical = bd_survival_classical(t, r * a, r * a - b);
    CHECK(mine == doctest::Approx(classical).epsilon(1e-12));
  }
}

TEST_CASE("survival_prob handles the pure-death degenerate case") {
  // a = 0 with b < 0 is the pure death model: per-line survival e^{bt}.
  LevelParams p{0.0, -1.0, 1.0};
  CHECK(survival_prob(1, 1.0, p) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
}

TEST_CASE("harris_params") {
  auto h = harris_params({1.0, 0.5, 1.0});
  CHECK(h.p_survive == doctest::Approx(0.5));
  CHECK(h.exp_rate == doctest::Approx(0.5));  // conditional mean W = 2
  CHECK(harris_params({1.0, 0.999, 1.0}).p_survive == doctest::Approx(0.999));
  CHECK(harris_params({1.0, 1e-6, 1.0}).p_survive == doctest::Approx(1e-6));
  CHECK_THROWS_AS(harris_params({1.0, 0.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(harris_params({1.0, 1.0, 1.0}), std::invalid_argument);
}

TEST_CASE("feller_moments") {
  auto fm = feller_moments(1.0, 1.0, 1.0, 0.0);
  CHECK(fm.mean == doctest::Approx(1.0));
  CHECK(fm.variance == doctest::Approx(2.0));
  auto fz = feller_moments(3.0, 0.0, 1.0, 0.7);
  CHECK(fz.mean == doctest::Approx(3.0));
  CHECK(fz.variance == doctest::Approx(0.0));
  auto fa = feller_moments(2.0, 1.5, 0.0, 0.3);
  CHECK(fa.variance == doctest::Approx(0.0));
  CHECK(fa.mean == doctest::Approx(2.0 * std::exp(0.45)));
}

TEST_CASE("poisson identities: f = 0 gives both sides exactly") {
  RngStream rng(10, 0, 0);
  IntensityMeasure nu{1.0, [](RngStream& r) { return r.uniform(); }};
  auto reps = poisson_identities_check(nu, [](double) { return 0.0; }, 1.0, 0.0, 2000, rng, "f0");
  for (const auto& rep : reps) {
    CHECK(rep.pass);
    CHECK(rep.statistic == doctest::Approx(0.0));
  }
}

TEST_CASE("poisson identities: Lebesgue intensity with constant f") {
  RngStream rng(11, 0, 0);
  IntensityMeasure nu{1.0, [](RngStream& r) { return r.uniform(); }};
  const double c = 0.5;
  double laplace = std::exp(std::exp(c) - 1.0);  // ~1.9113
  CHECK(laplace == doctest::Approx(1.9113).epsilon(1e-4));
  auto reps = poisson_identities_check(
      nu, [c](double) { return c; }, laplace, c * c * 1.0, 100000, rng, "const_f");
  CHECK(reps[0].pass);
  CHECK(reps[1].pass);
}

TEST_CASE("poisson identities: indicator variance is nu(A)") {
  RngStream rng(12, 0, 0);
  IntensityMeasure nu{2.0, [](RngStream& r) { return r.uniform(0.0, 2.0); }};
  // f = 1_{[0,0.5]}: int f^2 dnu = 0.5; E e^{int f} = e^{0.5(e-1)}.
  auto reps = poisson_identities_check(
      nu, [](double z) { return z <= 0.5 ? 1.0 : 0.0; }, std::exp(0.5 * (std::exp(1.0) - 1.0)),
      0.5, 100000, rng, "indicator");
  CHECK(reps[0].pass);
  CHECK(reps[1].pass);
}
