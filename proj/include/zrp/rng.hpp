#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace zrp {

/* Stream seeding: a master seed plus a stream id are digested through
 * splitmix64 so that distinct ids give statistically independent mt19937_64
 * states.  Every consumer of randomness in the library owns one RngStream;
 * results are a pure function of (master seed, stream id, call sequence)
 * and in particular do not depend on thread scheduling. */
inline std::uint64_t splitmix64(std::uint64_t& s) {
  s += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id) {
    std::uint64_t s = master_seed ^ (0x6a09e667f3bcc909ULL + stream_id * 0x9e3779b97f4a7c15ULL);
    std::uint64_t a = splitmix64(s), b = splitmix64(s);
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    gen_.seed(seq);
  }

  std::uint64_t raw() { return gen_(); }

  /* uniform on (0,1): top 53 bits, then nudged away from 0 so that log() is
   * safe.  std::*_distribution is avoided on purpose: its output is not
   * pinned across standard library implementations, and bitwise
   * reproducibility of every artifact is a hard requirement here. */
  double uniform() {
    double u = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    return u > 0.0 ? u : 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  double exponential(double rate) {
    if (!(rate > 0.0)) throw std::invalid_argument("exponential: rate must be positive");
    return -std::log1p(-uniform()) / rate;
  }

  /* unbiased integer in [0, n) by rejection on the top bits */
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: empty range");
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do { v = gen_(); } while (v >= limit);
    return v % n;
  }

  int flip_sign() { return (gen_() & 1ULL) ? 1 : -1; }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace zrp
