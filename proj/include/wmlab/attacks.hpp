#pragma once

// Removal and forgery attacks against the token and bit watermarks.

#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wmlab/bitmark.hpp"
#include "wmlab/toyvae.hpp"
#include "wmlab/types.hpp"

namespace wmlab {

// ---- VQ-Regen ---------------------------------------------------------------

/// Token map whose cell (i, j) is the k-th nearest codebook entry (k = 1 is
/// the nearest).
TokenMap kth_nearest_tokens(const Latent& latent, const Codebook& codebook, Index k);

/// encode -> rank-k token per cell -> lookup -> decode.
Image vq_regen(const Image& image, const EncoderProfile& profile, Index k);

// ---- LatentOpt ----------------------------------------------------------------

/// l-infinity budget for pixel-space optimization; pixels are in [0,1] so
/// c = 8/255 is eight 8-bit steps.
struct OptBudget {
  double norm_order = std::numeric_limits<double>::infinity();
  double c = 8.0 / 255.0;
  double alpha = 1.0 / 255.0;
  int steps = 300;
  int verify_every = 10;
  std::uint64_t seed = 0;  // random start for removal

  void validate() const;
};

struct TracePoint {
  int step = 0;
  double loss = 0.0;
  double z = 0.0;
  double p = 1.0;
  double log10_p = 0.0;
  double psnr = 0.0;
};

struct OptResult {
  Image image;
  std::vector<TracePoint> trace;  // one row per checkpoint
  int selected_step = 0;
  std::int64_t budget_violations = 0;  // steps whose iterate left the budget or [0,1]
  int steps_taken = 0;
};

using ImageVerifier = std::function<DetectionReport(const Image&)>;

/// Smallest change to `candidate` such that |candidate - x| <= c elementwise
/// and candidate in [0,1], exactly in floating point.
Image project_linf(const Image& x, const Image& candidate, double c);

/// Sign-gradient ascent on ||E(x + d) - E(x)||^2 from a seeded uniform start
/// in the budget box. With a verifier, checkpoints are scored every
/// verify_every steps and the one with the weakest detection (largest p,
/// then smallest z) is returned; without one the final iterate is returned.
OptResult latentopt_removal(const Image& image, const EncoderProfile& attacker, const OptBudget& budget,
                            const ImageVerifier& verifier = {});

/// Sign-gradient descent on ||E(x_c + d) - E(x_w)||^2 from d = 0. Returns
/// the checkpoint with the strongest detection (smallest p, then largest z).
OptResult latentopt_forgery(const Image& cover, const Image& reference, const EncoderProfile& attacker,
                            const OptBudget& budget, const ImageVerifier& verifier = {});

void write_trace_csv(std::ostream& out, std::span<const TracePoint> trace);

// ---- BitOpt -----------------------------------------------------------------

struct FlipTarget {
  std::size_t scale = 0;
  std::size_t position = 0;  // index into the scale's bit sequence

  bool operator==(const FlipTarget&) const = default;
};

/// Interior positions of one bit sequence whose trigram is 010 or 101.
std::vector<std::size_t> flip_positions(std::span<const std::uint8_t> bits);

std::vector<FlipTarget> find_flip_targets(const ResidualPyramid& pyramid);

enum class TargetSelection {
  All,      // every 010/101 center
  Disjoint  // left to right, skipping centers adjacent to an already chosen one
};

struct BitOptConfig {
  double margin = 0.02;  // mu
  double epsilon = 0.01;
  double alpha = 0.001;
  int steps = 200;
  std::vector<std::size_t> target_scales;  // empty = finest scale only
  TargetSelection selection = TargetSelection::All;
  double stop_p = 0.01;

  void validate() const;
};

/// BitOpt loss at a fixed linearization: targets, their current signs and
/// all quantized residuals are frozen at `base`, and
///     L(x) = sum_t |e_t(x) + sign_t * mu|
/// with e_t(x) the resampled running residual of encode(x).
class BitOptObjective {
 public:
  BitOptObjective(const Image& base, const EncoderProfile& profile, const ScaleSchedule& schedule,
                  std::vector<FlipTarget> targets, double margin);

  double loss(const Image& image) const;
  /// dL/dx, propagated through the resampling adjoint and encode_pullback.
  Image gradient(const Image& image) const;
  const std::vector<FlipTarget>& targets() const { return targets_; }

 private:
  std::vector<Latent> unquantized(const Image& image) const;

  const EncoderProfile* profile_;
  const ScaleSchedule* schedule_;
  std::vector<FlipTarget> targets_;
  std::vector<double> signs_;
  std::vector<Latent> quantized_;
  double margin_;
};

/// Targets restricted to `scales` (empty = finest) and thinned per `selection`.
std::vector<FlipTarget> select_flip_targets(const ResidualPyramid& pyramid, std::span<const std::size_t> scales,
                                            TargetSelection selection);

struct BitOptResult {
  Image image;
  BitmarkDetection detection;
  std::vector<TracePoint> trace;  // one row per step
  int steps_taken = 0;
  std::int64_t budget_violations = 0;
};

BitOptResult bitopt_removal(const Image& image, const EncoderProfile& profile, const ScaleSchedule& schedule,
                            const GreenNGramSet& green, const BitOptConfig& config);

// ---- Frequency injection --------------------------------------------------------

struct FreqInjectConfig {
  int spacing = 32;
  double log_alpha = 8.0;
  int bin_limit = 0;  // 0 = every in-bounds lattice point
  bool overwrite = false;
  std::uint64_t seed = 0;
  /// alpha is specified for a frame of this many pixels and rescaled by
  /// H*W / reference_pixels, which keeps the pixel-domain amplitude fixed.
  double reference_pixels = 1024.0 * 1024.0;

  void validate() const;
};

/// Settings A, B, C: (7.75, 4 bins), (8.0, 4 bins), (8.0, all bins).
FreqInjectConfig freq_setting(char name);

struct FreqInjectResult {
  Image image;       // clamped
  Image unclamped;   // real part before clamping
  double imag_residue = 0.0;  // ||Im|| / ||Re|| of the inverse transform
  double alpha = 0.0;         // effective magnitude
  std::vector<std::pair<Index, Index>> bins;  // centered (row, col) of injected points
  std::vector<std::string> notes;
};

/// Lattice points (c_y - k*s, c_x + k*s), (c_y + k*s, c_x + k*s) for
/// k = 1, 2, ..., in that order, in centered coordinates; points outside the
/// spectrum are skipped with a note.
std::vector<std::pair<Index, Index>> injection_lattice(Index height, Index width, int spacing, int bin_limit,
                                                       std::vector<std::string>* notes = nullptr);

FreqInjectResult freq_inject(const Image& image, const FreqInjectConfig& config);

using ComplexPlane = Eigen::MatrixXcd;

/// Unnormalized 2-D DFT and its inverse (the inverse divides by H*W).
ComplexPlane fft2(const ComplexPlane& in);
ComplexPlane ifft2(const ComplexPlane& in);
ComplexPlane fft2(const Plane& in);

/// Centered row/col index -> unshifted DFT index.
Index unshift_index(Index centered, Index n);

// ---- Averaging and perturbations --------------------------------------------------

Image average_corpus(std::span<const Image> images);

enum class PerturbKind { GaussNoise, GaussBlur, Brightness, Contrast, DctQuantize, Rotate, CenterCropResize, HFlip };

/// Strength semantics, all identity at 0:
///   gauss-noise: sigma of additive noise;  gauss-blur: kernel sigma in pixels;
///   brightness: additive offset;  contrast: (x - 0.5) * (1 + s) + 0.5;
///   dct-quantize: step on orthonormal 8x8 block DCT coefficients;
///   rotate: degrees about the center (bilinear, edge-clamped);
///   center-crop-resize: fraction of each side removed before resizing back;
///   hflip: mirror when s > 0.
/// Output is clamped to [0,1].
Image perturb(const Image& image, PerturbKind kind, double strength, std::uint64_t seed = 0);

const char* to_string(PerturbKind kind);
PerturbKind perturb_kind_from_string(const std::string& s);

}  // namespace wmlab
