#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

#include "celp/errors.hpp"

// Deterministic randomness for the whole project. Every stream is fully
// specified here so that runs are reproducible from a seed alone:
//
//   - seed expansion / stream derivation: splitmix64
//   - stream generator: xoshiro256** (Blackman & Vigna reference update)
//   - bounded integers: rejection sampling on the top range (no modulo bias)
//   - uniform reals: 53 high bits scaled to [0,1)
//   - normals: Box-Muller on two uniform draws, both values consumed in order
//
// Substreams are derived as splitmix64(seed ^ fnv1a64(tag)), one tag per
// subsystem ("data", "lps", "init", "eval", ...).

namespace celp {

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (char c : s) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 1099511628211ull;
  }
  return h;
}

struct SplitMix64 {
  std::uint64_t state = 0;

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
};

inline std::uint64_t derive_stream(std::uint64_t seed, std::string_view tag) {
  SplitMix64 sm{seed ^ fnv1a64(tag)};
  return sm.next();
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    SplitMix64 sm{seed};
    for (auto& word : s_) word = sm.next();
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Unbiased draw from [0, n).
  std::uint64_t bounded(std::uint64_t n) {
    if (n == 0) throw EmptyCandidateError("bounded draw from empty range");
    const std::uint64_t threshold = (0ull - n) % n;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  // Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double mag = std::sqrt(-2.0 * std::log(u1));
    constexpr double two_pi = 6.28318530717958647692;
    spare_ = mag * std::sin(two_pi * u2);
    have_spare_ = true;
    return mag * std::cos(two_pi * u2);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t s_[4] = {};
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace celp
