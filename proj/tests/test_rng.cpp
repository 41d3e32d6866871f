#include <cmath>
#include <set>

#include "doctest.h"
#include "levelsim/rng.hpp"
#include "levelsim/stats.hpp"

using namespace levelsim;

TEST_CASE("streams are deterministic and distinct") {
  RngStream a(42, 3, 7), b(42, 3, 7), c(42, 3, 8), d(42, 4, 7);
  for (int i = 0; i < 100; ++i) {
    std::uint64_t va = a.next_u64();
    CHECK(va == b.next_u64());
  }
  std::set<std::uint64_t> firsts;
  firsts.insert(RngStream(42, 3, 7).next_u64());
  firsts.insert(c.next_u64());
  firsts.insert(d.next_u64());
  firsts.insert(RngStream(43, 3, 7).next_u64());
  CHECK(firsts.size() == 4);
}

TEST_CASE("uniform lies in the open unit interval and is uniform") {
  RngStream rng(1, 0, 0);
  std::vector<double> xs(20000);
  for (auto& x : xs) {
    x = rng.uniform();
    REQUIRE(x > 0.0);
    REQUIRE(x < 1.0);
  }
  auto rep = ks_test("rng_uniform", xs, [](double x) { return x; });
  CHECK(rep.pass);
}

TEST_CASE("poisson moments, including the splitting branch") {
  RngStream rng(7, 0, 0);
  for (double mean : {3.0, 57.5, 950.0}) {
    const int reps = 20000;
    std::vector<double> xs(reps);
    for (auto& x : xs) x = static_cast<double>(rng.poisson(mean));
    auto ms = mean_with_se(xs);
    CHECK(std::fabs(ms.mean - mean) < 4.0 * std::sqrt(mean / reps));
    double var = 0.0;
    for (double x : xs) var += (x - ms.mean) * (x - ms.mean);
    var /= reps - 1;
    CHECK(std::fabs(var - mean) < 0.05 * mean);
  }
}

TEST_CASE("normal moments") {
  RngStream rng(9, 1, 2);
  const int reps = 50000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < reps; ++i) {
    double z = rng.normal();
    s += z;
    s2 += z * z;
  }
  CHECK(std::fabs(s / reps) < 4.0 / std::sqrt(static_cast<double>(reps)));
  CHECK(std::fabs(s2 / reps - 1.0) < 0.03);
}

TEST_CASE("exponential mean") {
  RngStream rng(11, 0, 5);
  const int reps = 40000;
  double s = 0.0;
  for (int i = 0; i < reps; ++i) s += rng.exponential(2.5);
  CHECK(std::fabs(s / reps - 0.4) < 0.01);
}
