#pragma once

// Bitwise multi-scale watermark on a residual pyramid.
//
// A latent is decomposed coarse to fine. At scale i the running residual r
// is resampled to (h_i, w_i), giving the unquantized residual e_i; every
// value is quantized to u_i = +s_i when e_i >= 0 and -s_i otherwise, and
// the upsampled u_i is subtracted from r. Bit = 1 iff u_i > 0. Bits of a
// scale are unfolded channel-outer: index (c * h_i + y) * w_i + x, so
// consecutive bits are horizontal neighbours of one channel.

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "json.hpp"
#include "wmlab/resize.hpp"
#include "wmlab/stats.hpp"
#include "wmlab/toyvae.hpp"
#include "wmlab/types.hpp"

namespace wmlab {

struct ScaleSchedule {
  std::vector<std::pair<Index, Index>> sizes;  // (h_i, w_i), coarse to fine
  std::vector<double> scales;                  // s_i
  Resample resample = Resample::Block;

  std::size_t count() const { return sizes.size(); }

  /// Throws unless sizes are nondecreasing, >= 1, end at (h, w), and one
  /// positive constant is given per scale.
  void validate(Index latent_h, Index latent_w) const;

  /// Total number of bits for `dim` channels.
  Index bit_count(Index dim) const;
};

/// Power-of-two schedule 1, 2, 4, ... up to (h, w) with s_i = 2^-i.
ScaleSchedule dyadic_schedule(Index h, Index w);

/// n-grams of length l + 1 over bits. Member codes read oldest bit first as
/// the most significant bit, so "01" is code 1 and "10" is code 2.
struct GreenNGramSet {
  int context_len = 1;
  std::vector<std::uint32_t> members{1, 2};

  static GreenNGramSet alternating() { return {}; }

  void validate() const;
  bool contains(std::uint32_t code) const;
  /// |G| / 2^(l+1), the per-trial null probability.
  double null_gamma() const;
};

struct ScaleResidual {
  Latent unquantized;  // e_i
  Latent quantized;    // u_i
  BitSeq bits;
};

struct ResidualPyramid {
  std::vector<ScaleResidual> scales;
  Latent final_residual;

  /// Sum of upsampled u_i on the latent grid.
  Latent reconstruction(const ScaleSchedule& schedule, Index h, Index w) const;
  std::vector<BitSeq> bits() const;
};

ResidualPyramid residual_decompose(const Latent& latent, const ScaleSchedule& schedule);

/// Channel-outer bit unfolding of a quantized residual, and its inverse.
BitSeq unfold_bits(const Latent& quantized);
Latent fold_bits(std::span<const std::uint8_t> bits, Index dim, Index h, Index w, double level);

/// Latent whose pyramid carries exactly the given per-scale bits.
Latent assemble_latent(const std::vector<BitSeq>& bits, const ScaleSchedule& schedule, Index dim);

/// Toy bit model: each bit is Bernoulli with logit `logit_one` for value 1.
struct ToyBitModel {
  double logit_one = 0.0;
};

struct BitmarkSample {
  Latent latent;
  std::vector<BitSeq> bits;  // per scale
};

/// Per scale, bits are drawn in unfolding order. Once l bits of the scale
/// exist, delta is added to the logit of each bit value that completes a
/// green n-gram. The first l bits of every scale are unbiased.
BitmarkSample sample_bitmark(const ToyBitModel& model, const GreenNGramSet& green, double delta,
                             const ScaleSchedule& schedule, Index dim, std::uint64_t rng_seed);

struct GreenCount {
  std::int64_t green = 0;
  std::int64_t trials = 0;
};

/// Counts green n-grams in one scale's bits: T = max(len - l, 0).
GreenCount count_green(std::span<const std::uint8_t> bits, const GreenNGramSet& green);

struct ScaleCount {
  Index height = 0;
  Index width = 0;
  std::int64_t green = 0;
  std::int64_t trials = 0;
  /// green - red n-gram count.
  std::int64_t surplus() const { return 2 * green - trials; }
};

struct BitmarkDetection {
  DetectionReport report;
  std::vector<ScaleCount> per_scale;
  std::vector<BitSeq> bits;
};

BitmarkDetection detect_bitmark_bits(const std::vector<BitSeq>& bits, const ScaleSchedule& schedule,
                                     const GreenNGramSet& green,
                                     std::span<const double> fpr_levels = kDefaultFprLevels);

BitmarkDetection detect_bitmark_latent(const Latent& latent, const ScaleSchedule& schedule,
                                       const GreenNGramSet& green,
                                       std::span<const double> fpr_levels = kDefaultFprLevels);

/// encode -> residual_decompose -> per-scale counts -> binomial test.
BitmarkDetection detect_bitmark(const Image& image, const EncoderProfile& profile, const ScaleSchedule& schedule,
                                const GreenNGramSet& green, std::span<const double> fpr_levels = kDefaultFprLevels);

nlohmann::json schedule_to_json(const ScaleSchedule& schedule);
ScaleSchedule schedule_from_json(const nlohmann::json& doc);
nlohmann::json green_to_json(const GreenNGramSet& green);
GreenNGramSet green_from_json(const nlohmann::json& doc);
nlohmann::json per_scale_to_json(const std::vector<ScaleCount>& per_scale);

}  // namespace wmlab
