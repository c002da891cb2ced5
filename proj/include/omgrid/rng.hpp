// Seeded deterministic RNG streams.
//
// All randomness in the library flows from one experiment seed; independent
// streams are derived from (seed, label, index) so adding a consumer never
// shifts the numbers another consumer sees. Uniform doubles are produced by
// explicit bit manipulation (std::uniform_real_distribution is not specified
// bit-for-bit across standard libraries).
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace omgrid {

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  // Independent stream keyed by (seed, label, index).
  static Rng stream(uint64_t seed, std::string_view label, uint64_t index = 0) {
    uint64_t state = seed;
    splitmix64(state);
    state ^= fnv1a64(label);
    splitmix64(state);
    state ^= index * 0x9e3779b97f4a7c15ull;
    return Rng(splitmix64(state));
  }

  uint64_t next_u64() { return gen_(); }

  // 53-bit uniform in [0, 1)
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + uniform01() * (b - a); }

  // inclusive range
  long uniform_int(long lo, long hi) {
    return lo + static_cast<long>(gen_() % static_cast<uint64_t>(hi - lo + 1));
  }

  // Laplace(0, b) via inverse CDF; standard deviation is b*sqrt(2)
  double laplace(double b) {
    double v = uniform01() - 0.5;
    double a = 1.0 - 2.0 * std::fabs(v);
    if (a < 0x1.0p-60) a = 0x1.0p-60;
    double x = -b * std::log(a);
    return v < 0 ? -x : x;
  }

  // Laplace with the given standard deviation
  double laplace_with_std(double sigma) { return laplace(sigma / std::sqrt(2.0)); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace omgrid
