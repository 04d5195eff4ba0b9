#pragma once

#include "wmlab/types.hpp"

namespace wmlab {

/// Reported PSNR for identical images.
inline constexpr double kPsnrCap = 99.0;

/// 10 log10(1 / MSE) with peak 1.0, capped at kPsnrCap.
double psnr(const Image& a, const Image& b);

/// Mean structural similarity over channels. Gaussian window 11x11 with
/// sigma 1.5 (shrunk to the image for smaller inputs), K1 = 0.01, K2 = 0.03,
/// dynamic range 1, valid-region averaging.
double ssim(const Image& a, const Image& b);

}  // namespace wmlab
