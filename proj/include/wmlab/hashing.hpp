#pragma once

// Deterministic, platform-independent hashing and pseudo-random streams.
//
// Context hash recipe (bit-exact, all arithmetic mod 2^64):
//
//   mix(x):  x ^= x >> 30; x *= 0xBF58476D1CE4E5B9;
//            x ^= x >> 27; x *= 0x94D049BB133111EB;
//            x ^= x >> 31;                      (SplitMix64 finalizer)
//
//   h  = mix(key ^ 0x9E3779B97F4A7C15)
//   for each token t in order:  h = mix(h ^ (uint64(t) + 0x9E3779B97F4A7C15))
//
// Test vectors live in tests/fixtures/hash_vectors.txt and are produced by
// tests/fixtures/gen_hash_vectors.py.

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace wmlab {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

/// Seed for the green partition of one step. `tokens` is the (sentinel
/// padded) context window, oldest first.
std::uint64_t context_hash(std::span<const std::int64_t> tokens, std::uint64_t key);

/// Convenience for combining seeds with small integer tags.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
  return mix64(mix64(base ^ kGoldenGamma) ^ (tag + kGoldenGamma));
}

/// Secret key plus context length l.
struct WatermarkKey {
  std::uint64_t secret = 0;
  int context_len = 1;
};

/// The l tokens preceding position i, padded with `sentinel` before the start.
std::vector<std::int64_t> context_window(std::span<const std::int32_t> sequence, std::size_t position,
                                         int context_len, std::int64_t sentinel);

/// SplitMix64 stream. Satisfies UniformRandomBitGenerator.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += kGoldenGamma;
    return mix64(state_);
  }

 private:
  std::uint64_t state_;
};

/// Uniform integer in [0, n). Unbiased (rejection on the top bits).
std::uint64_t uniform_index(SplitMix64& rng, std::uint64_t n);

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(SplitMix64& rng) { return double(rng() >> 11) * 0x1.0p-53; }

/// Standard normal draw (Box-Muller); portable unlike std::normal_distribution.
double standard_normal(SplitMix64& rng);

/// Green set of size floor(gamma * vocab_size), drawn by a seeded partial
/// Fisher-Yates shuffle. Returned in draw order.
std::vector<std::int32_t> green_set(std::uint64_t seed, std::int32_t vocab_size, double gamma);

/// Membership mask of `green_set` (1 = green).
std::vector<std::uint8_t> green_mask(std::uint64_t seed, std::int32_t vocab_size, double gamma);

}  // namespace wmlab
