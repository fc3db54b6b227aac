// SPDX-License-Identifier: Apache-2.0

#ifndef NRWE_RNG_HPP
#define NRWE_RNG_HPP

#include <cmath>
#include <cstdint>

#include "errors.hpp"

namespace nrwe {

// Counter-based generator: the i-th output of a stream keyed by `seed` is
// splitmix64_mix(seed + i * GOLDEN). Streams are split by hashing the parent
// seed with the child index, so replication sub-streams never overlap the
// parent sequence. One uniform is consumed per normal draw (inverse CDF),
// which keeps streams alignable across runs.

inline std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : key_(seed) {}

  std::uint64_t next_u64() { return splitmix64_mix(key_ + (++counter_) * kGolden); }

  /// Uniform on the open interval (0, 1); safe as inverse-CDF input.
  double next_uniform01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1p-53;
  }

  /// Uniform on (a, b).
  double next_uniform(double a, double b) { return a + (b - a) * next_uniform01(); }

  double next_normal() { return inverse_normal_cdf(next_uniform01()); }

  /// Child stream for replication `index`; disjoint from the parent stream.
  static std::uint64_t split(std::uint64_t seed, std::uint64_t index) {
    return splitmix64_mix(seed ^ splitmix64_mix(index + kGolden));
  }

  /// Wichura's AS 241 (PPND16) rational approximation of the standard normal
  /// quantile; absolute error below 1e-15 on (0,1).
  static double inverse_normal_cdf(double p);

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace nrwe

#endif  // NRWE_RNG_HPP
