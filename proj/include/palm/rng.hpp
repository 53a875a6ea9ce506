#pragma once

#include <cmath>
#include <cstdint>

namespace palm {

// SplitMix64. Small, fast, and identical output on every platform, which keeps
// seeded experiments reproducible across builds.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform in {0, ..., n-1}; unbiased by rejection.
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n == 0) return 0;
    std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return v % n;
  }

  // Exact Poisson sampling: multiplication method on chunks of mean <= 32
  // (sums of independent Poissons are Poisson).
  std::uint64_t poisson(double mean) {
    std::uint64_t total = 0;
    while (mean > 32.0) {
      total += poisson_small(32.0);
      mean -= 32.0;
    }
    return total + poisson_small(mean);
  }

  // Derived stream for sample index k; independent of draws made so far.
  Rng fork(std::uint64_t k) const {
    Rng r(state_ ^ (0xD1B54A32D192ED03ull * (k + 1)));
    r.next_u64();
    return r;
  }

 private:
  std::uint64_t poisson_small(double mean) {
    if (mean <= 0.0) return 0;
    double threshold = std::exp(-mean);
    std::uint64_t k = 0;
    double p = 1.0;
    for (;;) {
      p *= uniform01();
      if (p <= threshold) return k;
      ++k;
    }
  }

  std::uint64_t state_;
};

}  // namespace palm
