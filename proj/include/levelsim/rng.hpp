#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace levelsim {

// Counter-based stream built on Philox 4x32-10 (Salmon et al., SC'11).
// A stream is identified by (seed, replicate, substream); draws advance a
// 64-bit block counter, so streams never overlap and a particle's draws do
// not depend on what any other particle consumed.
class RngStream {
 public:
  RngStream() : RngStream(0, 0, 0) {}

  RngStream(std::uint64_t seed, std::uint64_t replicate, std::uint64_t substream) {
    // Expand the user seed into the Philox key with splitmix64 so that
    // nearby seeds give unrelated keys.
    std::uint64_t k = splitmix64(seed);
    key0_ = static_cast<std::uint32_t>(k);
    key1_ = static_cast<std::uint32_t>(k >> 32);
    std::uint64_t sid = splitmix64(replicate * 0x9E3779B97F4A7C15ULL ^ substream);
    // Keep replicate and substream in the high counter words verbatim as
    // well as mixed: the mix decorrelates, the verbatim words guarantee
    // distinct counters even under mixer collisions.
    hi0_ = static_cast<std::uint32_t>(replicate) ^ static_cast<std::uint32_t>(sid);
    hi1_ = static_cast<std::uint32_t>(substream) + static_cast<std::uint32_t>(sid >> 32);
    block_ = 0;
    pos_ = 4;
    have_spare_normal_ = false;
    spare_normal_ = 0.0;
  }

  std::uint32_t next_u32() {
    if (pos_ == 4) refill();
    return buf_[pos_++];
  }

  std::uint64_t next_u64() {
    std::uint64_t lo = next_u32();
    std::uint64_t hi = next_u32();
    return (hi << 32) | lo;
  }

  // Uniform on the open interval (0,1); safe to pass to log().
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double exponential(double rate) {
    if (!(rate > 0.0)) throw std::invalid_argument("exponential rate must be > 0");
    return -std::log(uniform()) / rate;
  }

  double normal() {
    if (have_spare_normal_) {
      have_spare_normal_ = false;
      return spare_normal_;
    }
    double u1 = uniform();
    double u2 = uniform();
    double rad = std::sqrt(-2.0 * std::log(u1));
    double ang = 6.283185307179586476925287 * u2;
    spare_normal_ = rad * std::sin(ang);
    have_spare_normal_ = true;
    return rad * std::cos(ang);
  }

  // Exact Poisson sample. Product method below the split threshold; larger
  // means use Poisson additivity, so the result stays exact for any mean.
  std::uint64_t poisson(double mean) {
    if (mean < 0.0) throw std::invalid_argument("poisson mean must be >= 0");
    if (mean == 0.0) return 0;
    std::uint64_t total = 0;
    while (mean > 400.0) {
      total += poisson_small(200.0);
      mean -= 200.0;
    }
    return total + poisson_small(mean);
  }

  std::uint64_t binomial(std::uint64_t n, double p) {
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("binomial p must be in [0,1]");
    std::uint64_t k = 0;
    for (std::uint64_t i = 0; i < n; ++i)
      if (uniform() < p) ++k;
    return k;
  }

 private:
  static std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

  std::uint64_t poisson_small(double mean) {
    double limit = std::exp(-mean);
    std::uint64_t k = 0;
    double prod = uniform();
    while (prod > limit) {
      ++k;
      prod *= uniform();
    }
    return k;
  }

  void refill() {
    std::uint32_t c0 = static_cast<std::uint32_t>(block_);
    std::uint32_t c1 = static_cast<std::uint32_t>(block_ >> 32);
    std::uint32_t c2 = hi0_;
    std::uint32_t c3 = hi1_;
    std::uint32_t k0 = key0_;
    std::uint32_t k1 = key1_;
    for (int round = 0; round < 10; ++round) {
      std::uint64_t p0 = 0xD2511F53ULL * c0;
      std::uint64_t p1 = 0xCD9E8D57ULL * c2;
      std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
      std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
      std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
      std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
      c0 = hi1 ^ c1 ^ k0;
      c1 = lo1;
      c2 = hi0 ^ c3 ^ k1;
      c3 = lo0;
      k0 += 0x9E3779B9U;
      k1 += 0xBB67AE85U;
    }
    buf_[0] = c0;
    buf_[1] = c1;
    buf_[2] = c2;
    buf_[3] = c3;
    ++block_;
    pos_ = 0;
  }

  std::uint32_t key0_, key1_;
  std::uint32_t hi0_, hi1_;
  std::uint64_t block_;
  std::uint32_t buf_[4];
  int pos_;
  bool have_spare_normal_;
  double spare_normal_;
};

}  // namespace levelsim
