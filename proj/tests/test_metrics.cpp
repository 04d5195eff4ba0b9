#include <cmath>

#include "doctest.h"
#include "wmlab/corpus.hpp"
#include "wmlab/hashing.hpp"
#include "wmlab/metrics.hpp"

using namespace wmlab;

TEST_CASE("PSNR of a constant 0.1 offset is 20 dB") {
  const Image a(8, 8, 0.5);
  const Image b(8, 8, 0.6);
  CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(psnr(a, a) == kPsnrCap);
  CHECK_THROWS_AS(psnr(a, Image(8, 9, 0.5)), ShapeError);
}

TEST_CASE("PSNR of seeded noise tracks its variance") {
  const Image a = synthetic_cover(64, 64, 1);
  Image b = a;
  SplitMix64 rng(2);
  double mse = 0.0;
  for (int c = 0; c < 3; ++c)
    for (Index i = 0; i < b.channels[c].size(); ++i) {
      const double d = 0.01 * standard_normal(rng);
      b.channels[c](i) += d;
      mse += d * d;
    }
  mse /= double(a.size());
  CHECK(psnr(a, b) == doctest::Approx(-10.0 * std::log10(mse)).epsilon(1e-12));
}

TEST_CASE("SSIM of constant images reduces to the luminance term") {
  const double c1 = 0.01 * 0.01;
  const double expected = (2 * 0.5 * 0.6 + c1) / (0.25 + 0.36 + c1);
  CHECK(ssim(Image(16, 16, 0.5), Image(16, 16, 0.6)) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("SSIM bounds and symmetry") {
  const Image a = synthetic_cover(32, 32, 3);
  const Image b = synthetic_cover(32, 32, 4);
  CHECK(ssim(a, a) == doctest::Approx(1.0));
  CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)));
  CHECK(ssim(a, b) < 1.0);
  CHECK(ssim(a, b) > -1.0);
  // Small inputs shrink the window rather than failing.
  CHECK(ssim(Image(4, 4, 0.2), Image(4, 4, 0.2)) == doctest::Approx(1.0));
}
