#pragma once

// Cover images and the toy laboratory presets.

#include <cstdint>

#include "wmlab/bitmark.hpp"
#include "wmlab/toyvae.hpp"
#include "wmlab/types.hpp"

namespace wmlab {

/// Seeded cover: a per-channel base level in [0.3, 0.7], three
/// low-frequency plane waves of amplitude <= 0.08 each, and a fine
/// Gaussian texture of standard deviation `texture`.
Image synthetic_cover(Index height, Index width, std::uint64_t seed, double texture = 0.02);

/// Center-crops to the target aspect ratio, then resizes (bilinear).
Image ingest_image(const Image& image, Index height, Index width);

/// Token lab: 16 x 16 tokens, patch 4, d = 8, |V| = 256, 64 x 64 images.
ProfileSpec token_lab_spec(EncoderKind kind = EncoderKind::LinearOrthonormal, std::uint64_t seed = 1);

/// Bit lab: 64 x 64 latent, patch 2, d = 4, 128 x 128 images.
ProfileSpec bit_lab_spec(EncoderKind kind = EncoderKind::LinearOrthonormal, std::uint64_t seed = 7);

inline constexpr Index kTokenLabSide = 16;
inline constexpr Index kBitLabSide = 64;

}  // namespace wmlab
