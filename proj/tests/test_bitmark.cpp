#include <cmath>

#include "doctest.h"
#include "wmlab/bitmark.hpp"
#include "wmlab/corpus.hpp"
#include "wmlab/hashing.hpp"

using namespace wmlab;

namespace {

BitSeq bits_of(const std::string& s) {
  BitSeq b;
  for (char c : s) b.push_back(c == '1');
  return b;
}

Latent random_latent(Index d, Index h, Index w, double scale, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Latent z(d, h, w);
  for (auto& ch : z.channels)
    for (Index i = 0; i < ch.size(); ++i) ch(i) = scale * (2 * uniform01(rng) - 1);
  return z;
}

}  // namespace

TEST_CASE("dyadic schedule") {
  const ScaleSchedule s = dyadic_schedule(64, 64);
  REQUIRE(s.count() == 7);
  CHECK(s.sizes.front() == std::pair<Index, Index>{1, 1});
  CHECK(s.sizes.back() == std::pair<Index, Index>{64, 64});
  CHECK(s.scales[0] == 0.5);
  CHECK(s.scales[6] == std::ldexp(1.0, -7));
  CHECK(s.bit_count(4) == 4 * (1 + 4 + 16 + 64 + 256 + 1024 + 4096));
  CHECK_NOTHROW(s.validate(64, 64));
  CHECK_THROWS(s.validate(32, 32));
  ScaleSchedule bad = s;
  std::swap(bad.sizes[1], bad.sizes[2]);
  CHECK_THROWS_AS(bad.validate(64, 64), ParameterError);
}

TEST_CASE("count_green by hand") {
  const GreenNGramSet g = GreenNGramSet::alternating();
  auto count = [&](const std::string& s) { return count_green(bits_of(s), g); };
  CHECK(count("0101").green == 3);
  CHECK(count("0101").trials == 3);
  CHECK(count("0011").green == 1);
  CHECK(count("0000").green == 0);
  CHECK(count("1").trials == 0);
  CHECK(count("").trials == 0);
  GreenNGramSet tri;
  tri.context_len = 2;
  tri.members = {0b010, 0b101};
  CHECK(count_green(bits_of("01010"), tri).green == 3);
  CHECK(count_green(bits_of("01010"), tri).trials == 3);
  CHECK(count_green(bits_of("0110"), tri).green == 0);
  CHECK(g.null_gamma() == 0.5);
  CHECK(tri.null_gamma() == 0.25);
}

TEST_CASE("green set validation") {
  GreenNGramSet g;
  g.members = {0, 1, 2, 3};
  CHECK_THROWS_AS(g.validate(), ParameterError);
  g.members = {4};
  CHECK_THROWS_AS(g.validate(), ParameterError);
  g.members = {1, 1};
  CHECK_THROWS_AS(g.validate(), ParameterError);
}

TEST_CASE("fold and unfold are inverse, channel-outer") {
  SplitMix64 rng(1);
  BitSeq bits(3 * 2 * 4);
  for (auto& b : bits) b = std::uint8_t(rng() & 1);
  const Latent q = fold_bits(bits, 3, 2, 4, 0.25);
  CHECK(unfold_bits(q) == bits);
  CHECK(q(1, 0, 2) == (bits[(1 * 2 + 0) * 4 + 2] ? 0.25 : -0.25));
}

TEST_CASE("decomposition: reconstruction plus final residual is the latent") {
  const ScaleSchedule s = dyadic_schedule(16, 16);
  for (Resample mode : {Resample::Block, Resample::Bilinear}) {
    ScaleSchedule sm = s;
    sm.resample = mode;
    const Latent z = random_latent(4, 16, 16, 0.7, 3);
    const ResidualPyramid p = residual_decompose(z, sm);
    CHECK(max_abs_diff(p.reconstruction(sm, 16, 16) + p.final_residual, z) < 1e-12);
    for (const auto& sc : p.scales)
      for (Index c = 0; c < 4; ++c) CHECK((sc.quantized.channels[c].array().abs() > 0).all());
  }
}

TEST_CASE("quantizer sends zero to the positive level") {
  ScaleSchedule s;
  s.sizes = {{1, 1}};
  s.scales = {0.5};
  const ResidualPyramid p = residual_decompose(Latent(2, 1, 1), s);
  CHECK(p.scales[0].bits == BitSeq{1, 1});
}

TEST_CASE("assemble then decompose recovers the bits exactly") {
  const ScaleSchedule s = dyadic_schedule(32, 32);
  SplitMix64 rng(2);
  std::vector<BitSeq> bits;
  for (const auto& [h, w] : s.sizes) {
    BitSeq b(std::size_t(4 * h * w));
    for (auto& x : b) x = std::uint8_t(rng() & 1);
    bits.push_back(b);
  }
  const ResidualPyramid p = residual_decompose(assemble_latent(bits, s, 4), s);
  CHECK(p.bits() == bits);
}

TEST_CASE("BitMark green-bigram fraction e^delta / (e^delta + 1)") {
  const double expected = std::exp(2.0) / (std::exp(2.0) + 1.0);
  CHECK(expected == doctest::Approx(0.881).epsilon(1e-3));
  const ScaleSchedule s = dyadic_schedule(32, 32);
  std::int64_t green = 0, trials = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const BitmarkSample b = sample_bitmark({}, GreenNGramSet::alternating(), 2.0, s, 4, seed);
    const BitmarkDetection d = detect_bitmark_bits(b.bits, s, GreenNGramSet::alternating());
    green += d.report.green;
    trials += d.report.trials;
  }
  CHECK(double(green) / double(trials) == doctest::Approx(expected).epsilon(0.02));
}

TEST_CASE("infinite delta forces every n-gram green") {
  const ScaleSchedule s = dyadic_schedule(8, 8);
  const BitmarkSample b = sample_bitmark({}, GreenNGramSet::alternating(), INFINITY, s, 2, 1);
  const BitmarkDetection d = detect_bitmark_bits(b.bits, s, GreenNGramSet::alternating());
  CHECK(d.report.green == d.report.trials);
}

TEST_CASE("image round trip recovers every bit on the bit lab profile") {
  const EncoderProfile prof(bit_lab_spec());
  const ScaleSchedule s = dyadic_schedule(kBitLabSide, kBitLabSide);
  const BitmarkSample b = sample_bitmark({}, GreenNGramSet::alternating(), 2.0, s, prof.dim(), 4);
  const Image img = decode(b.latent, prof);
  const BitmarkDetection d = detect_bitmark(img, prof, s, GreenNGramSet::alternating());
  CHECK(d.bits == b.bits);
  const BitmarkDetection truth = detect_bitmark_bits(b.bits, s, GreenNGramSet::alternating());
  CHECK(d.report.log10_p == truth.report.log10_p);
  REQUIRE(d.per_scale.size() == s.count());
  std::int64_t total = 0;
  for (const ScaleCount& c : d.per_scale) total += c.trials;
  CHECK(total == d.report.trials);
}

TEST_CASE("schedule and green set JSON") {
  ScaleSchedule s = dyadic_schedule(8, 4);
  s.resample = Resample::Bilinear;
  const ScaleSchedule back = schedule_from_json(schedule_to_json(s));
  CHECK(back.sizes == s.sizes);
  CHECK(back.scales == s.scales);
  CHECK(back.resample == Resample::Bilinear);
  GreenNGramSet g;
  g.context_len = 2;
  g.members = {2, 5};
  const GreenNGramSet gb = green_from_json(green_to_json(g));
  CHECK(gb.context_len == 2);
  CHECK(gb.members == g.members);
}
