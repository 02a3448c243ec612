#pragma once

#include <cmath>
#include <cstdint>

namespace quhe {

// Deterministic 64-bit generator (splitmix64).  std::mt19937 plus the
// standard distributions would work too, but the distribution outputs are
// implementation-defined, and scenario results have to be reproducible
// bit-for-bit across toolchains.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1), 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Exponential with unit mean (inverse CDF on a [0,1) uniform).
  double exponential() { return -std::log1p(-uniform()); }

  // Standard normal via Box-Muller; one value per call keeps the
  // draw sequence easy to reason about.
  double gaussian() {
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

 private:
  std::uint64_t state_;
};

// Decorrelated seed for work item `index` under a base seed, so that
// batch runs can vary one run without touching the draws of another.
inline std::uint64_t substream_seed(std::uint64_t base, std::uint64_t index) {
  SplitMix64 g(base ^ (0x9e3779b97f4a7c15ull * (index + 1)));
  return g.next();
}

}  // namespace quhe
