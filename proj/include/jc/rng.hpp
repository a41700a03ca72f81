#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace jc {

/// FNV-1a 64-bit hash. Used for cache keys and RNG stream derivation.
inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed = 0xcbf29ce484222325ULL) {
  std::uint64_t h = seed;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Deterministic RNG. Wraps mt19937_64 (fully specified by the standard) and
/// hand-rolls the distributions, because the std <random> distributions are
/// implementation-defined and would break bit-reproducibility across stdlibs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform integer in [0, bound). bound must be > 0. Rejection sampling.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % bound;
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % bound;
  }

  std::size_t index(std::size_t bound) { return static_cast<std::size_t>(below(bound)); }

  /// Uniform real in [0, 1) with 53 bits of precision.
  double real01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform real in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * real01(); }

  /// Standard normal via Box-Muller. Consumes two uniforms per call.
  double gaussian() {
    double u1;
    do {
      u1 = real01();
    } while (u1 <= 0.0);
    const double u2 = real01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

  /// Derives an independent, order-insensitive stream from a textual label.
  static Rng derive(std::uint64_t seed, std::string_view label) {
    return Rng(seed ^ fnv1a64(label));
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace jc
