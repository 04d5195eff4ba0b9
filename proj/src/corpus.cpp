#include "wmlab/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "wmlab/hashing.hpp"
#include "wmlab/resize.hpp"

namespace wmlab {

Image synthetic_cover(Index height, Index width, std::uint64_t seed, double texture) {
  if (height < 1 || width < 1) throw ParameterError("synthetic_cover: sizes must be >= 1");
  SplitMix64 rng(seed);
  Image img(height, width, 0.0);
  for (int c = 0; c < 3; ++c) {
    img.channels[c].setConstant(0.3 + 0.4 * uniform01(rng));
    for (int wave = 0; wave < 3; ++wave) {
      const double amp = 0.08 * uniform01(rng);
      const double fy = 3.0 * (2.0 * uniform01(rng) - 1.0) / double(height);
      const double fx = 3.0 * (2.0 * uniform01(rng) - 1.0) / double(width);
      const double phase = 2.0 * std::numbers::pi * uniform01(rng);
      for (Index y = 0; y < height; ++y)
        for (Index x = 0; x < width; ++x)
          img(c, y, x) += amp * std::sin(2.0 * std::numbers::pi * (fy * double(y) + fx * double(x)) + phase);
    }
    // Fine texture: white noise through a 3x3 binomial filter, scaled to
    // standard deviation `texture` (the filter's noise gain is 3/8).
    Plane noise(height, width);
    for (Index i = 0; i < noise.size(); ++i) noise(i) = standard_normal(rng);
    const double w[3] = {0.25, 0.5, 0.25};
    for (Index y = 0; y < height; ++y)
      for (Index x = 0; x < width; ++x) {
        double acc = 0.0;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx)
            acc += w[dy + 1] * w[dx + 1] *
                   noise(std::clamp<Index>(y + dy, 0, height - 1), std::clamp<Index>(x + dx, 0, width - 1));
        img(c, y, x) += texture / 0.375 * acc;
      }
  }
  return clamp01(img);
}

Image ingest_image(const Image& image, Index height, Index width) {
  if (height < 1 || width < 1) throw ParameterError("ingest_image: sizes must be >= 1");
  const double target = double(width) / double(height);
  Index ch = image.height();
  Index cw = image.width();
  if (double(cw) / double(ch) > target) {
    cw = std::max<Index>(1, std::llround(double(ch) * target));
  } else {
    ch = std::max<Index>(1, std::llround(double(cw) / target));
  }
  Image crop;
  for (int c = 0; c < 3; ++c)
    crop.channels[c] = image.channels[c].block((image.height() - ch) / 2, (image.width() - cw) / 2, ch, cw);
  return clamp01(resize_image(crop, height, width));
}

ProfileSpec token_lab_spec(EncoderKind kind, std::uint64_t seed) {
  ProfileSpec s;
  s.kind = kind;
  s.patch = 4;
  s.dim = 8;
  s.seed = seed;
  s.gain = 0.1;
  s.hidden = 16;
  s.codebook_size = 256;
  s.codebook_spread = 1.0;
  return s;
}

ProfileSpec bit_lab_spec(EncoderKind kind, std::uint64_t seed) {
  ProfileSpec s;
  s.kind = kind;
  s.patch = 2;
  s.dim = 4;
  s.seed = seed;
  s.gain = 0.1;
  s.hidden = 16;
  s.codebook_size = 16;
  s.codebook_spread = 1.0;
  return s;
}

}  // namespace wmlab
