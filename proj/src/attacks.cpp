#include "wmlab/attacks.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "wmlab/hashing.hpp"
#include "wmlab/metrics.hpp"
#include "wmlab/resize.hpp"

namespace wmlab {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Image sign_of(const Image& g) {
  Image s;
  for (int c = 0; c < 3; ++c) s.channels[c] = g.channels[c].unaryExpr([](double v) {
    return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0);
  });
  return s;
}

bool within_budget(const Image& x, const Image& xp, double c) {
  return max_abs_diff(xp, x) <= c && in_unit_range(xp);
}

TracePoint checkpoint(int step, double loss, const Image& x, const Image& xp, const ImageVerifier& verifier) {
  TracePoint tp;
  tp.step = step;
  tp.loss = loss;
  tp.psnr = psnr(x, xp);
  if (verifier) {
    const DetectionReport r = verifier(xp);
    tp.z = r.z;
    tp.p = r.p;
    tp.log10_p = r.log10_p;
  } else {
    tp.z = kNaN;
    tp.p = kNaN;
    tp.log10_p = kNaN;
  }
  return tp;
}

// Shared loop for both LatentOpt variants. `direction` is +1 for ascent.
template <typename GradFn, typename LossFn>
OptResult run_pgd(const Image& x, Image start, const OptBudget& budget, double direction, GradFn&& grad,
                  LossFn&& loss_of, const ImageVerifier& verifier, bool prefer_weak) {
  OptResult res;
  Image xp = project_linf(x, start, budget.c);
  if (!within_budget(x, xp, budget.c)) ++res.budget_violations;

  std::vector<Image> kept;
  res.trace.push_back(checkpoint(0, loss_of(xp), x, xp, verifier));
  kept.push_back(xp);
  for (int step = 1; step <= budget.steps; ++step) {
    const Image g = grad(xp);
    xp = project_linf(x, xp + (direction * budget.alpha) * sign_of(g), budget.c);
    if (!within_budget(x, xp, budget.c)) ++res.budget_violations;
    res.steps_taken = step;
    if (step % budget.verify_every == 0 || step == budget.steps) {
      res.trace.push_back(checkpoint(step, loss_of(xp), x, xp, verifier));
      if (verifier) kept.push_back(xp);
    }
  }

  if (!verifier) {
    res.image = xp;
    res.selected_step = res.steps_taken;
    return res;
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < res.trace.size(); ++i) {
    const TracePoint& a = res.trace[i];
    const TracePoint& b = res.trace[best];
    const bool better = prefer_weak ? (a.log10_p > b.log10_p || (a.log10_p == b.log10_p && a.z < b.z))
                                    : (a.log10_p < b.log10_p || (a.log10_p == b.log10_p && a.z > b.z));
    if (better) best = i;
  }
  res.image = kept[best];
  res.selected_step = res.trace[best].step;
  return res;
}

}  // namespace

// ---- VQ-Regen ---------------------------------------------------------------

TokenMap kth_nearest_tokens(const Latent& latent, const Codebook& codebook, Index k) {
  if (k < 1 || k > codebook.size()) throw ParameterError("vq_regen: k must lie in [1, |V|]");
  if (k == 1) return quantize_nearest(latent, codebook);
  const Quantization q = quantize(latent, codebook);
  TokenMap out = q.tokens;
  for (Index i = 0; i < out.length(); ++i) out[i] = q.ranking[static_cast<std::size_t>(i)][static_cast<std::size_t>(k - 1)];
  return out;
}

Image vq_regen(const Image& image, const EncoderProfile& profile, Index k) {
  const TokenMap t = kth_nearest_tokens(encode(image, profile), profile.codebook(), k);
  return decode(lookup(t, profile.codebook()), profile);
}

// ---- LatentOpt ----------------------------------------------------------------

void OptBudget::validate() const {
  if (!std::isinf(norm_order) || norm_order < 0) throw ParameterError("only the l-infinity budget is supported");
  if (!(c >= 0) || !std::isfinite(c)) throw ParameterError("budget c must be finite and >= 0");
  if (!(alpha > 0)) throw ParameterError("step size must be positive");
  if (steps < 0) throw ParameterError("steps must be >= 0");
  if (verify_every < 1) throw ParameterError("verify_every must be >= 1");
}

Image project_linf(const Image& x, const Image& candidate, double c) {
  if (!x.same_shape(candidate)) throw ShapeError("project_linf: shape mismatch");
  Image out = candidate;
  for (int ch = 0; ch < 3; ++ch) {
    const Plane& xo = x.channels[ch];
    Plane& v = out.channels[ch];
    for (Index i = 0; i < v.size(); ++i) {
      const double base = xo(i);
      double d = std::clamp(v(i) - base, -c, c);
      double y = std::clamp(base + d, 0.0, 1.0);
      while (y - base > c) y = std::nextafter(y, base);
      while (base - y > c) y = std::nextafter(y, base);
      v(i) = y;
    }
  }
  return out;
}

OptResult latentopt_removal(const Image& image, const EncoderProfile& attacker, const OptBudget& budget,
                            const ImageVerifier& verifier) {
  budget.validate();
  const Latent z0 = encode(image, attacker);
  Image start = image;
  SplitMix64 rng(budget.seed);
  for (auto& ch : start.channels)
    for (Index i = 0; i < ch.size(); ++i) ch(i) += budget.c * (2.0 * uniform01(rng) - 1.0);
  auto grad = [&](const Image& xp) { return encode_pullback(xp, attacker, 2.0 * (encode(xp, attacker) - z0)); };
  auto loss = [&](const Image& xp) { return squared_norm(encode(xp, attacker) - z0); };
  return run_pgd(image, start, budget, +1.0, grad, loss, verifier, true);
}

OptResult latentopt_forgery(const Image& cover, const Image& reference, const EncoderProfile& attacker,
                            const OptBudget& budget, const ImageVerifier& verifier) {
  budget.validate();
  if (!cover.same_shape(reference)) throw ShapeError("latentopt_forgery: cover and reference differ in shape");
  const Latent target = encode(reference, attacker);
  auto grad = [&](const Image& xp) { return encode_pullback(xp, attacker, 2.0 * (encode(xp, attacker) - target)); };
  auto loss = [&](const Image& xp) { return squared_norm(encode(xp, attacker) - target); };
  return run_pgd(cover, cover, budget, -1.0, grad, loss, verifier, false);
}

void write_trace_csv(std::ostream& out, std::span<const TracePoint> trace) {
  out << "step,loss,z,p,log10_p,psnr\n";
  char buf[256];
  for (const auto& t : trace) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", t.step, t.loss, t.z, t.p, t.log10_p, t.psnr);
    out << buf;
  }
}

// ---- BitOpt -----------------------------------------------------------------

std::vector<std::size_t> flip_positions(std::span<const std::uint8_t> bits) {
  std::vector<std::size_t> out;
  for (std::size_t k = 1; k + 1 < bits.size(); ++k)
    if (bits[k - 1] == bits[k + 1] && bits[k] != bits[k - 1]) out.push_back(k);
  return out;
}

std::vector<FlipTarget> find_flip_targets(const ResidualPyramid& pyramid) {
  std::vector<FlipTarget> out;
  for (std::size_t s = 0; s < pyramid.scales.size(); ++s)
    for (std::size_t k : flip_positions(pyramid.scales[s].bits)) out.push_back({s, k});
  return out;
}

std::vector<FlipTarget> select_flip_targets(const ResidualPyramid& pyramid, std::span<const std::size_t> scales,
                                            TargetSelection selection) {
  std::vector<std::size_t> chosen(scales.begin(), scales.end());
  if (chosen.empty() && !pyramid.scales.empty()) chosen.push_back(pyramid.scales.size() - 1);
  std::vector<FlipTarget> out;
  for (std::size_t s : chosen) {
    if (s >= pyramid.scales.size()) throw ParameterError("target scale out of range");
    std::size_t last = std::numeric_limits<std::size_t>::max();
    for (std::size_t k : flip_positions(pyramid.scales[s].bits)) {
      if (selection == TargetSelection::Disjoint && last != std::numeric_limits<std::size_t>::max() && k <= last + 1)
        continue;
      out.push_back({s, k});
      last = k;
    }
  }
  return out;
}

void BitOptConfig::validate() const {
  if (!(margin >= 0)) throw ParameterError("margin must be >= 0");
  if (!(epsilon >= 0)) throw ParameterError("epsilon must be >= 0");
  if (!(alpha > 0)) throw ParameterError("alpha must be positive");
  if (steps < 0) throw ParameterError("steps must be >= 0");
}

BitOptObjective::BitOptObjective(const Image& base, const EncoderProfile& profile, const ScaleSchedule& schedule,
                                 std::vector<FlipTarget> targets, double margin)
    : profile_(&profile), schedule_(&schedule), targets_(std::move(targets)), margin_(margin) {
  const ResidualPyramid pyr = residual_decompose(encode(base, profile), schedule);
  for (const auto& s : pyr.scales) quantized_.push_back(s.quantized);
  signs_.reserve(targets_.size());
  for (const FlipTarget& t : targets_) {
    if (t.scale >= pyr.scales.size() || t.position >= pyr.scales[t.scale].bits.size())
      throw ParameterError("flip target out of range");
    signs_.push_back(pyr.scales[t.scale].bits[t.position] ? 1.0 : -1.0);
  }
}

std::vector<Latent> BitOptObjective::unquantized(const Image& image) const {
  Latent residual = encode(image, *profile_);
  const Index h = residual.height();
  const Index w = residual.width();
  std::size_t last = 0;
  for (const FlipTarget& t : targets_) last = std::max(last, t.scale);
  std::vector<Latent> out;
  for (std::size_t i = 0; i <= last && i < schedule_->count(); ++i) {
    const auto [hi, wi] = schedule_->sizes[i];
    out.push_back(resize_latent(residual, hi, wi, schedule_->resample));
    residual = residual - resize_latent(quantized_[i], h, w, schedule_->resample);
  }
  return out;
}

namespace {

// (channel, row, col) of a channel-outer bit index.
std::array<Index, 3> unravel(std::size_t pos, Index h, Index w) {
  const auto p = static_cast<Index>(pos);
  return {p / (h * w), (p / w) % h, p % w};
}

}  // namespace

double BitOptObjective::loss(const Image& image) const {
  if (targets_.empty()) return 0.0;
  const std::vector<Latent> e = unquantized(image);
  double acc = 0.0;
  for (std::size_t k = 0; k < targets_.size(); ++k) {
    const Latent& ei = e[targets_[k].scale];
    const auto [c, y, x] = unravel(targets_[k].position, ei.height(), ei.width());
    acc += std::abs(ei(c, y, x) + signs_[k] * margin_);
  }
  return acc;
}

Image BitOptObjective::gradient(const Image& image) const {
  const Latent z = encode(image, *profile_);
  if (targets_.empty()) return Image(image.height(), image.width(), 0.0);
  const std::vector<Latent> e = unquantized(image);
  std::vector<Latent> ge;
  for (const Latent& ei : e) ge.emplace_back(ei.dim(), ei.height(), ei.width(), 0.0);
  for (std::size_t k = 0; k < targets_.size(); ++k) {
    const Latent& ei = e[targets_[k].scale];
    const auto [c, y, x] = unravel(targets_[k].position, ei.height(), ei.width());
    const double v = ei(c, y, x) + signs_[k] * margin_;
    ge[targets_[k].scale](c, y, x) += v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0);
  }
  Latent gz(z.dim(), z.height(), z.width(), 0.0);
  for (const Latent& g : ge) gz = gz + resize_latent_adjoint(g, z.height(), z.width(), schedule_->resample);
  return encode_pullback(image, *profile_, gz);
}

BitOptResult bitopt_removal(const Image& image, const EncoderProfile& profile, const ScaleSchedule& schedule,
                            const GreenNGramSet& green, const BitOptConfig& config) {
  config.validate();
  BitOptResult res;
  Image xp = image;
  for (int step = 0;; ++step) {
    const ResidualPyramid pyr = residual_decompose(encode(xp, profile), schedule);
    res.detection = detect_bitmark_bits(pyr.bits(), schedule, green);
    const std::vector<FlipTarget> targets = select_flip_targets(pyr, config.target_scales, config.selection);
    const BitOptObjective obj(xp, profile, schedule, targets, config.margin);
    TracePoint tp;
    tp.step = step;
    tp.loss = obj.loss(xp);
    tp.z = res.detection.report.z;
    tp.p = res.detection.report.p;
    tp.log10_p = res.detection.report.log10_p;
    tp.psnr = psnr(image, xp);
    res.trace.push_back(tp);
    res.steps_taken = step;
    if (res.detection.report.p > config.stop_p || step >= config.steps || targets.empty()) break;
    xp = project_linf(image, xp - config.alpha * sign_of(obj.gradient(xp)), config.epsilon);
    if (!within_budget(image, xp, config.epsilon)) ++res.budget_violations;
  }
  res.image = xp;
  return res;
}

// ---- Frequency injection --------------------------------------------------------

void FreqInjectConfig::validate() const {
  if (spacing < 1) throw ParameterError("spacing must be >= 1");
  if (bin_limit < 0) throw ParameterError("bin limit must be >= 0");
  if (!std::isfinite(log_alpha)) throw ParameterError("log magnitude must be finite");
  if (!(reference_pixels > 0)) throw ParameterError("reference frame must be positive");
}

FreqInjectConfig freq_setting(char name) {
  FreqInjectConfig cfg;
  switch (name) {
    case 'A': case 'a': cfg.log_alpha = 7.75; cfg.bin_limit = 4; break;
    case 'B': case 'b': cfg.log_alpha = 8.0; cfg.bin_limit = 4; break;
    case 'C': case 'c': cfg.log_alpha = 8.0; cfg.bin_limit = 0; break;
    default: throw ParameterError(std::string("unknown frequency injection setting: ") + name);
  }
  return cfg;
}

std::vector<std::pair<Index, Index>> injection_lattice(Index height, Index width, int spacing, int bin_limit,
                                                       std::vector<std::string>* notes) {
  const Index cy = height / 2;
  const Index cx = width / 2;
  std::vector<std::pair<Index, Index>> out;
  auto full = [&] { return bin_limit > 0 && static_cast<int>(out.size()) >= bin_limit; };
  for (Index k = 1; cx + k * spacing < width && !full(); ++k) {
    for (Index sign : {-1, 1}) {
      if (full()) break;
      const Index row = cy + sign * k * spacing;
      if (row < 0 || row >= height) {
        if (notes) notes->push_back("skipped bin (" + std::to_string(row) + "," + std::to_string(cx + k * spacing) + ")");
        continue;
      }
      out.emplace_back(row, cx + k * spacing);
    }
  }
  if (bin_limit > 0 && static_cast<int>(out.size()) < bin_limit && notes)
    notes->push_back("only " + std::to_string(out.size()) + " of " + std::to_string(bin_limit) + " bins fit");
  return out;
}

Index unshift_index(Index centered, Index n) { return ((centered - n / 2) % n + n) % n; }

namespace {

template <bool Forward>
ComplexPlane fft2_impl(const ComplexPlane& in) {
  Eigen::FFT<double> fft;
  ComplexPlane out(in.rows(), in.cols());
  std::vector<std::complex<double>> src;
  std::vector<std::complex<double>> dst;
  for (Index r = 0; r < in.rows(); ++r) {
    src.resize(static_cast<std::size_t>(in.cols()));
    for (Index c = 0; c < in.cols(); ++c) src[c] = in(r, c);
    if constexpr (Forward) fft.fwd(dst, src); else fft.inv(dst, src);
    for (Index c = 0; c < in.cols(); ++c) out(r, c) = dst[c];
  }
  src.resize(static_cast<std::size_t>(in.rows()));
  for (Index c = 0; c < in.cols(); ++c) {
    for (Index r = 0; r < in.rows(); ++r) src[r] = out(r, c);
    if constexpr (Forward) fft.fwd(dst, src); else fft.inv(dst, src);
    for (Index r = 0; r < in.rows(); ++r) out(r, c) = dst[r];
  }
  return out;
}

}  // namespace

ComplexPlane fft2(const ComplexPlane& in) { return fft2_impl<true>(in); }
ComplexPlane ifft2(const ComplexPlane& in) { return fft2_impl<false>(in); }
ComplexPlane fft2(const Plane& in) { return fft2_impl<true>(in.cast<std::complex<double>>()); }

FreqInjectResult freq_inject(const Image& image, const FreqInjectConfig& config) {
  config.validate();
  FreqInjectResult res;
  const Index h = image.height();
  const Index w = image.width();
  res.alpha = std::exp(config.log_alpha) * double(h * w) / config.reference_pixels;
  res.bins = injection_lattice(h, w, config.spacing, config.bin_limit, &res.notes);

  SplitMix64 rng(config.seed);
  double re_sq = 0.0;
  double im_sq = 0.0;
  for (int c = 0; c < 3; ++c) {
    ComplexPlane spec = fft2(image.channels[c]);
    for (const auto& [row, col] : res.bins) {
      const double phi = 2.0 * std::numbers::pi * uniform01(rng);
      const std::complex<double> a = std::polar(res.alpha, phi);
      const Index uy = unshift_index(row, h);
      const Index ux = unshift_index(col, w);
      const Index my = (h - uy) % h;
      const Index mx = (w - ux) % w;
      if (config.overwrite) {
        spec(uy, ux) = a;
        spec(my, mx) = std::conj(a);
      } else {
        spec(uy, ux) += a;
        spec(my, mx) += std::conj(a);
      }
    }
    const ComplexPlane back = ifft2(spec);
    res.unclamped.channels[c] = back.real();
    re_sq += back.real().squaredNorm();
    im_sq += back.imag().squaredNorm();
  }
  res.imag_residue = re_sq > 0 ? std::sqrt(im_sq / re_sq) : std::sqrt(im_sq);
  res.image = clamp01(res.unclamped);
  return res;
}

// ---- Averaging and perturbations --------------------------------------------------

Image average_corpus(std::span<const Image> images) {
  if (images.empty()) throw ParameterError("average_corpus: empty corpus");
  Image acc(images[0].height(), images[0].width(), 0.0);
  for (const Image& im : images) {
    if (!im.same_shape(acc)) throw ShapeError("average_corpus: images differ in shape");
    acc = acc + im;
  }
  return (1.0 / double(images.size())) * acc;
}

namespace {

Plane gaussian_blur(const Plane& in, double sigma) {
  const auto radius = static_cast<Index>(std::ceil(3.0 * sigma));
  Eigen::VectorXd k(2 * radius + 1);
  for (Index i = -radius; i <= radius; ++i) k[i + radius] = std::exp(-0.5 * double(i * i) / (sigma * sigma));
  k /= k.sum();
  const Index h = in.rows();
  const Index w = in.cols();
  Plane tmp(h, w);
  for (Index y = 0; y < h; ++y)
    for (Index x = 0; x < w; ++x) {
      double acc = 0.0;
      for (Index i = -radius; i <= radius; ++i) acc += k[i + radius] * in(y, std::clamp<Index>(x + i, 0, w - 1));
      tmp(y, x) = acc;
    }
  Plane out(h, w);
  for (Index y = 0; y < h; ++y)
    for (Index x = 0; x < w; ++x) {
      double acc = 0.0;
      for (Index i = -radius; i <= radius; ++i) acc += k[i + radius] * tmp(std::clamp<Index>(y + i, 0, h - 1), x);
      out(y, x) = acc;
    }
  return out;
}

Eigen::MatrixXd dct_matrix(Index n) {
  Eigen::MatrixXd d(n, n);
  for (Index k = 0; k < n; ++k)
    for (Index i = 0; i < n; ++i) {
      const double scale = k == 0 ? std::sqrt(1.0 / double(n)) : std::sqrt(2.0 / double(n));
      d(k, i) = scale * std::cos(std::numbers::pi * (double(i) + 0.5) * double(k) / double(n));
    }
  return d;
}

Plane dct_quantize(const Plane& in, double step) {
  Plane out = in;
  for (Index y0 = 0; y0 < in.rows(); y0 += 8)
    for (Index x0 = 0; x0 < in.cols(); x0 += 8) {
      const Index bh = std::min<Index>(8, in.rows() - y0);
      const Index bw = std::min<Index>(8, in.cols() - x0);
      const Eigen::MatrixXd dy = dct_matrix(bh);
      const Eigen::MatrixXd dx = dct_matrix(bw);
      Eigen::MatrixXd coef = dy * in.block(y0, x0, bh, bw) * dx.transpose();
      coef = coef.unaryExpr([step](double v) { return step * std::round(v / step); });
      out.block(y0, x0, bh, bw) = dy.transpose() * coef * dx;
    }
  return out;
}

double sample_bilinear(const Plane& p, double y, double x) {
  y = std::clamp(y, 0.0, double(p.rows() - 1));
  x = std::clamp(x, 0.0, double(p.cols() - 1));
  const auto y0 = static_cast<Index>(std::floor(y));
  const auto x0 = static_cast<Index>(std::floor(x));
  const Index y1 = std::min(y0 + 1, p.rows() - 1);
  const Index x1 = std::min(x0 + 1, p.cols() - 1);
  const double fy = y - double(y0);
  const double fx = x - double(x0);
  return (1 - fy) * ((1 - fx) * p(y0, x0) + fx * p(y0, x1)) + fy * ((1 - fx) * p(y1, x0) + fx * p(y1, x1));
}

}  // namespace

Image perturb(const Image& image, PerturbKind kind, double strength, std::uint64_t seed) {
  if (!std::isfinite(strength)) throw ParameterError("perturbation strength must be finite");
  if (strength == 0.0) return image;
  Image out = image;
  switch (kind) {
    case PerturbKind::GaussNoise: {
      if (strength < 0) throw ParameterError("noise sigma must be >= 0");
      SplitMix64 rng(seed);
      for (auto& ch : out.channels)
        for (Index i = 0; i < ch.size(); ++i) ch(i) += strength * standard_normal(rng);
      break;
    }
    case PerturbKind::GaussBlur:
      if (strength < 0) throw ParameterError("blur sigma must be >= 0");
      for (auto& ch : out.channels) ch = gaussian_blur(ch, strength);
      break;
    case PerturbKind::Brightness:
      for (auto& ch : out.channels) ch.array() += strength;
      break;
    case PerturbKind::Contrast:
      for (auto& ch : out.channels) ch = ((ch.array() - 0.5) * (1.0 + strength) + 0.5).matrix();
      break;
    case PerturbKind::DctQuantize:
      if (strength < 0) throw ParameterError("DCT step must be >= 0");
      for (auto& ch : out.channels) ch = dct_quantize(ch, strength);
      break;
    case PerturbKind::Rotate: {
      const double rad = strength * std::numbers::pi / 180.0;
      const double cs = std::cos(rad);
      const double sn = std::sin(rad);
      const double cy = 0.5 * double(image.height() - 1);
      const double cx = 0.5 * double(image.width() - 1);
      for (int c = 0; c < 3; ++c)
        for (Index y = 0; y < image.height(); ++y)
          for (Index x = 0; x < image.width(); ++x) {
            const double dy = double(y) - cy;
            const double dx = double(x) - cx;
            out(c, y, x) = sample_bilinear(image.channels[c], cy + cs * dy - sn * dx, cx + sn * dy + cs * dx);
          }
      break;
    }
    case PerturbKind::CenterCropResize: {
      if (strength < 0 || strength >= 1) throw ParameterError("crop fraction must lie in [0,1)");
      const Index ch = std::max<Index>(1, std::llround(double(image.height()) * (1.0 - strength)));
      const Index cw = std::max<Index>(1, std::llround(double(image.width()) * (1.0 - strength)));
      Image crop;
      for (int c = 0; c < 3; ++c)
        crop.channels[c] = image.channels[c].block((image.height() - ch) / 2, (image.width() - cw) / 2, ch, cw);
      out = resize_image(crop, image.height(), image.width());
      break;
    }
    case PerturbKind::HFlip:
      if (strength > 0)
        for (auto& ch : out.channels) ch = ch.rowwise().reverse().eval();
      break;
  }
  return clamp01(out);
}

const char* to_string(PerturbKind kind) {
  switch (kind) {
    case PerturbKind::GaussNoise: return "gauss-noise";
    case PerturbKind::GaussBlur: return "gauss-blur";
    case PerturbKind::Brightness: return "brightness";
    case PerturbKind::Contrast: return "contrast";
    case PerturbKind::DctQuantize: return "dct-quantize";
    case PerturbKind::Rotate: return "rotate";
    case PerturbKind::CenterCropResize: return "center-crop-resize";
    case PerturbKind::HFlip: return "hflip";
  }
  return "?";
}

PerturbKind perturb_kind_from_string(const std::string& s) {
  for (PerturbKind k : {PerturbKind::GaussNoise, PerturbKind::GaussBlur, PerturbKind::Brightness,
                        PerturbKind::Contrast, PerturbKind::DctQuantize, PerturbKind::Rotate,
                        PerturbKind::CenterCropResize, PerturbKind::HFlip})
    if (s == to_string(k)) return k;
  throw ParameterError("unknown perturbation: " + s);
}

}  // namespace wmlab
