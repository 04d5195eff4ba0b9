#include "wmlab/hashing.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "wmlab/errors.hpp"

namespace wmlab {

std::uint64_t context_hash(std::span<const std::int64_t> tokens, std::uint64_t key) {
  std::uint64_t h = mix64(key ^ kGoldenGamma);
  for (const std::int64_t t : tokens) h = mix64(h ^ (static_cast<std::uint64_t>(t) + kGoldenGamma));
  return h;
}

std::vector<std::int64_t> context_window(std::span<const std::int32_t> sequence, std::size_t position,
                                         int context_len, std::int64_t sentinel) {
  std::vector<std::int64_t> window(static_cast<std::size_t>(context_len), sentinel);
  for (int k = 0; k < context_len; ++k) {
    // window[context_len - 1] is the immediately preceding token
    const std::size_t back = static_cast<std::size_t>(context_len - k);
    if (position >= back) window[k] = sequence[position - back];
  }
  return window;
}

std::uint64_t uniform_index(SplitMix64& rng, std::uint64_t n) {
  if (n == 0) throw ParameterError("uniform_index: empty range");
  // Lemire's multiply-shift with rejection.
  std::uint64_t x = rng();
  __uint128_t m = static_cast<__uint128_t>(x) * n;
  std::uint64_t low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      x = rng();
      m = static_cast<__uint128_t>(x) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double standard_normal(SplitMix64& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<std::int32_t> green_set(std::uint64_t seed, std::int32_t vocab_size, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ParameterError("green_set: gamma must lie in (0,1)");
  if (vocab_size < 2) throw ParameterError("green_set: vocab_size must be >= 2");
  const auto count = static_cast<std::int32_t>(std::floor(gamma * vocab_size));
  std::vector<std::int32_t> perm(static_cast<std::size_t>(vocab_size));
  std::iota(perm.begin(), perm.end(), 0);
  SplitMix64 rng(seed);
  for (std::int32_t i = 0; i < count; ++i) {
    const auto j = i + static_cast<std::int32_t>(uniform_index(rng, static_cast<std::uint64_t>(vocab_size - i)));
    std::swap(perm[i], perm[j]);
  }
  perm.resize(static_cast<std::size_t>(count));
  return perm;
}

std::vector<std::uint8_t> green_mask(std::uint64_t seed, std::int32_t vocab_size, double gamma) {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(vocab_size), 0);
  for (const auto v : green_set(seed, vocab_size, gamma)) mask[v] = 1;
  return mask;
}

}  // namespace wmlab
