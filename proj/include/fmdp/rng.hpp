#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace fmdp {

/// SplitMix64: the n-th output is a fixed bijective mix of `seed + n * gamma`,
/// so a stream is fully determined by its 64-bit seed. Satisfies
/// UniformRandomBitGenerator.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Stable 64-bit hash of (label, replication): FNV-1a over the label bytes,
/// then the replication index folded in through the SplitMix64 finalizer.
inline std::uint64_t stable_hash(std::string_view label, std::uint64_t replication) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return SplitMix64::mix(h ^ SplitMix64::mix(replication + 0x9E3779B97F4A7C15ULL));
}

}  // namespace fmdp
