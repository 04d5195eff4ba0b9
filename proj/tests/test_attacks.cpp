#include <cmath>
#include <sstream>

#include "doctest.h"
#include "wmlab/attacks.hpp"
#include "wmlab/corpus.hpp"
#include "wmlab/hashing.hpp"
#include "wmlab/metrics.hpp"
#include "wmlab/token_schemes.hpp"

using namespace wmlab;

namespace {

BitSeq bits_of(const std::string& s) {
  BitSeq b;
  for (char c : s) b.push_back(c == '1');
  return b;
}

Image random_direction(Index h, Index w, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Image d(h, w);
  for (int c = 0; c < 3; ++c)
    for (Index i = 0; i < d.channels[c].size(); ++i) d.channels[c](i) = 2 * uniform01(rng) - 1;
  return d;
}

double inner(const Image& a, const Image& b) {
  double s = 0;
  for (int c = 0; c < 3; ++c) s += (a.channels[c].array() * b.channels[c].array()).sum();
  return s;
}

}  // namespace

TEST_CASE("VQ-Regen k = 1 keeps token maps; k = 2 inverts IndexMark colours") {
  ProfileSpec s = token_lab_spec();
  s.codebook_layout = CodebookLayout::Paired;
  const EncoderProfile prof(s);
  const TokenPairing pairing = build_pairing(prof.codebook(), 42);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const TokenMap wm = embed_indexmark(sample_tokens(ToyARModel{}, 16, 16, seed), pairing);
    const Image img = decode(lookup(wm, prof.codebook()), prof);
    const TokenMap k1 = quantize_nearest(encode(vq_regen(img, prof, 1), prof), prof.codebook());
    CHECK(k1.indices == wm.indices);
    const TokenMap k2 = quantize_nearest(encode(vq_regen(img, prof, 2), prof), prof.codebook());
    CHECK(detect_indexmark(k2, pairing).green == 0);
  }
  CHECK_THROWS_AS(vq_regen(Image(16, 16, 0.5), prof, 0), ParameterError);
}

TEST_CASE("kth_nearest_tokens follows the ranking") {
  const EncoderProfile prof(token_lab_spec());
  const Latent z = encode(synthetic_cover(16, 16, 2), prof);
  const Quantization q = quantize(z, prof.codebook());
  const TokenMap t3 = kth_nearest_tokens(z, prof.codebook(), 3);
  for (Index i = 0; i < t3.length(); ++i) CHECK(t3[i] == q.ranking[std::size_t(i)][2]);
}

TEST_CASE("projection enforces the budget exactly") {
  const Image x = synthetic_cover(8, 8, 1);
  Image cand = x + random_direction(8, 8, 2);
  const double c = 8.0 / 255.0;
  const Image p = project_linf(x, cand, c);
  CHECK(in_unit_range(p));
  CHECK(max_abs_diff(p, x) <= c);
}

TEST_CASE("LatentOpt removal and forgery stay inside the budget at every step") {
  const EncoderProfile prof(token_lab_spec());
  const Image x = synthetic_cover(32, 32, 5);
  OptBudget b;
  b.steps = 30;
  b.verify_every = 10;
  b.seed = 3;
  const OptResult r = latentopt_removal(x, prof, b);
  CHECK(r.budget_violations == 0);
  CHECK(max_abs_diff(r.image, x) <= b.c);
  CHECK(in_unit_range(r.image));
  CHECK(r.trace.size() == 4);
  CHECK(r.trace.front().step == 0);
  CHECK(r.trace.back().step == 30);
  const OptResult f = latentopt_forgery(x, synthetic_cover(32, 32, 6), prof, b);
  CHECK(f.budget_violations == 0);
  CHECK(max_abs_diff(f.image, x) <= b.c);
  CHECK(f.trace.back().loss < f.trace.front().loss);
  b.c = -1.0;
  CHECK_THROWS_AS(b.validate(), ParameterError);
}

TEST_CASE("trace CSV") {
  std::ostringstream out;
  std::vector<TracePoint> t{{0, 1.5, 0.0, 1.0, 0.0, 99.0}};
  write_trace_csv(out, t);
  CHECK(out.str() == "step,loss,z,p,log10_p,psnr\n0,1.5,0,1,0,99\n");
}

TEST_CASE("flip positions are 010 / 101 centres") {
  CHECK(flip_positions(bits_of("01011")) == std::vector<std::size_t>{1, 2});
  CHECK(flip_positions(bits_of("0000111")).empty());
  CHECK(flip_positions(bits_of("10101")) == std::vector<std::size_t>{1, 2, 3});
  CHECK(flip_positions(bits_of("10")).empty());
}

TEST_CASE("disjoint selection skips adjacent centres") {
  ScaleSchedule s;
  s.sizes = {{1, 5}};
  s.scales = {0.5};
  // Latent whose single scale carries 1 0 1 0 1 in one channel.
  Latent z(1, 1, 5);
  const double v[5] = {1, -1, 1, -1, 1};
  for (int i = 0; i < 5; ++i) z(0, 0, i) = v[i];
  const ResidualPyramid p = residual_decompose(z, s);
  REQUIRE(p.scales[0].bits == bits_of("10101"));
  CHECK(find_flip_targets(p).size() == 3);
  const std::vector<std::size_t> none;
  const auto all = select_flip_targets(p, none, TargetSelection::All);
  const auto disjoint = select_flip_targets(p, none, TargetSelection::Disjoint);
  CHECK(all.size() == 3);
  REQUIRE(disjoint.size() == 2);
  CHECK(disjoint[0].position == 1);
  CHECK(disjoint[1].position == 3);
}

TEST_CASE("BitOpt loss gradient matches central differences") {
  const EncoderProfile prof(bit_lab_spec());
  const ScaleSchedule s = dyadic_schedule(16, 16);
  for (int trial = 0; trial < 5; ++trial) {
    const Image x = synthetic_cover(32, 32, 40 + trial);
    const ResidualPyramid p = residual_decompose(encode(x, prof), s);
    const std::vector<std::size_t> none;
    const BitOptObjective obj(x, prof, s, select_flip_targets(p, none, TargetSelection::All), 0.02);
    REQUIRE(!obj.targets().empty());
    const Image dir = random_direction(32, 32, 90 + trial);
    const double h = 1e-7;
    const double fd = (obj.loss(x + h * dir) - obj.loss(x - h * dir)) / (2 * h);
    const double an = inner(obj.gradient(x), dir);
    CHECK(std::abs(fd - an) <= 1e-4 * std::max(1.0, std::abs(an)));
  }
}

TEST_CASE("BitOpt removes the watermark inside its budget") {
  const EncoderProfile prof(bit_lab_spec());
  const ScaleSchedule s = dyadic_schedule(32, 32);
  const BitmarkSample b = sample_bitmark({}, GreenNGramSet::alternating(), 2.0, s, prof.dim(), 3);
  const Image img = decode(b.latent, prof);
  BitOptConfig cfg;
  cfg.alpha = cfg.epsilon / 10;
  const BitOptResult r = bitopt_removal(img, prof, s, GreenNGramSet::alternating(), cfg);
  CHECK(r.budget_violations == 0);
  CHECK(max_abs_diff(r.image, img) <= cfg.epsilon);
  CHECK(r.detection.report.p > 0.01);
}

TEST_CASE("injection lattice order and bounds") {
  std::vector<std::string> notes;
  const auto l = injection_lattice(256, 256, 32, 4, &notes);
  REQUIRE(l.size() == 4);
  CHECK(l[0] == std::pair<Index, Index>{96, 160});
  CHECK(l[1] == std::pair<Index, Index>{160, 160});
  CHECK(l[2] == std::pair<Index, Index>{64, 192});
  CHECK(l[3] == std::pair<Index, Index>{192, 192});
  const auto small = injection_lattice(128, 128, 32, 4, &notes);
  CHECK(small.size() == 2);
  CHECK_FALSE(notes.empty());
  CHECK(unshift_index(64, 128) == 0);
  CHECK(unshift_index(0, 128) == 64);
  CHECK(unshift_index(127, 128) == 63);
}

TEST_CASE("FFT round trip and a hand DFT") {
  Plane p(2, 2);
  p << 1, 2, 3, 4;
  const ComplexPlane f = fft2(p);
  CHECK(std::abs(f(0, 0) - std::complex<double>(10, 0)) < 1e-12);
  CHECK(std::abs(f(0, 1) - std::complex<double>(-2, 0)) < 1e-12);
  CHECK(std::abs(f(1, 0) - std::complex<double>(-4, 0)) < 1e-12);
  CHECK(std::abs(f(1, 1)) < 1e-12);
  CHECK((ifft2(f).real() - p).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("frequency injection is real and lands at the requested magnitude") {
  for (char setting : {'A', 'B', 'C'}) {
    FreqInjectConfig cfg = freq_setting(setting);
    cfg.seed = 7;
    const Image gray(256, 256, 0.5);
    const FreqInjectResult r = freq_inject(gray, cfg);
    CHECK(r.imag_residue < 1e-9);
    CHECK(max_abs_diff(r.image, r.unclamped) == 0.0);
    for (int c = 0; c < 3; ++c) {
      const ComplexPlane f = fft2(r.image.channels[c]);
      for (const auto& [row, col] : r.bins) {
        const double mag = std::abs(f(unshift_index(row, 256), unshift_index(col, 256)));
        CHECK(std::abs(mag - r.alpha) / r.alpha < 0.01);
      }
    }
  }
  CHECK_THROWS_AS(freq_setting('D'), ParameterError);
}

TEST_CASE("perturbations at strength 0 are the identity") {
  const Image x = synthetic_cover(32, 32, 8);
  for (PerturbKind k : {PerturbKind::GaussNoise, PerturbKind::GaussBlur, PerturbKind::Brightness,
                        PerturbKind::Contrast, PerturbKind::DctQuantize, PerturbKind::Rotate,
                        PerturbKind::CenterCropResize, PerturbKind::HFlip}) {
    CHECK(max_abs_diff(perturb(x, k, 0.0, 1), x) == 0.0);
    CHECK(perturb_kind_from_string(to_string(k)) == k);
  }
}

TEST_CASE("perturbation hand cases") {
  const Image x = synthetic_cover(32, 32, 9);
  const Image flip = perturb(perturb(x, PerturbKind::HFlip, 1.0), PerturbKind::HFlip, 1.0);
  CHECK(max_abs_diff(flip, x) == 0.0);
  CHECK(perturb(Image(4, 4, 0.5), PerturbKind::Brightness, 0.1)(0, 0, 0) == doctest::Approx(0.6));
  CHECK(perturb(Image(4, 4, 0.7), PerturbKind::Contrast, 1.0)(1, 2, 3) == doctest::Approx(0.9));
  // Sigma 0.1 noise on mid-gray: PSNR about 20 dB.
  const Image noisy = perturb(Image(128, 128, 0.5), PerturbKind::GaussNoise, 0.1, 3);
  CHECK(psnr(Image(128, 128, 0.5), noisy) == doctest::Approx(20.0).epsilon(0.01));
  // Blur keeps constants.
  CHECK(max_abs_diff(perturb(Image(16, 16, 0.3), PerturbKind::GaussBlur, 2.0), Image(16, 16, 0.3)) < 1e-12);
}

TEST_CASE("averaging") {
  const std::vector<Image> imgs{Image(4, 4, 0.2), Image(4, 4, 0.4), Image(4, 4, 0.9)};
  CHECK(average_corpus(imgs)(2, 3, 1) == doctest::Approx(0.5));
  const std::vector<Image> mixed{Image(4, 4, 0.2), Image(4, 5, 0.2)};
  CHECK_THROWS_AS(average_corpus(mixed), ShapeError);
}
