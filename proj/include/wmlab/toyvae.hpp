#pragma once

// Deterministic toy VQ-VAE family.
//
// Images are cut into non-overlapping p x p patches; a patch is the vector
// x in R^{3p^2} with element (c * p + dy) * p + dx. Every profile decodes a
// latent cell z in R^d to
//     x = 0.5 + gain * B z,
// where B is a seeded (3p^2 x d) matrix with orthonormal columns. By default
// the columns are also orthogonal to the per-channel constant patches, so
// the latent carries patch texture and not the local colour. The output is
// clamped to [0,1].
//
// Encoders:
//   linear-orthonormal:  z = B^T (x - 0.5) / gain      (exact inverse of decode)
//   nonlinear:           f = pool(x) - 0.5  (mean over q x q sub-blocks per colour)
//                        z = W2 tanh(W1 f + b1) + b2
//
// A constant image therefore encodes to the zero latent under the default
// linear profile (-0.5 * B^T 1 / gain without the zero-mean basis), and a
// zero latent decodes to the mid-gray image 0.5.

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "wmlab/types.hpp"

namespace wmlab {

enum class EncoderKind { LinearOrthonormal, Nonlinear };
enum class CodebookLayout { Dispersed, Paired };
enum class BoxLevel { White, Grey, Black };

/// Minimum pairwise distance enforced by build_codebook:
/// 0.2 * spread * size^(-1/dim).
double codebook_distance_floor(Index size, Index dim, double spread);

/// Seeded vectors uniform in [-spread, spread]^dim, rejection-resampled so
/// that no two are closer than codebook_distance_floor. Throws
/// ConstructionError when a point cannot be placed within 10,000 draws.
Codebook build_codebook(std::uint64_t seed, Index size, Index dim, double spread = 1.0);

/// Codebook made of size/2 tight pairs: each pair is c +- r u around a
/// dispersed center c, with r one eighth of the minimum center distance, so
/// partners are mutual nearest neighbours. Indices are shuffled; an odd
/// size leaves one unpaired center.
Codebook build_paired_codebook(std::uint64_t seed, Index size, Index dim, double spread = 1.0);

struct ProfileSpec {
  EncoderKind kind = EncoderKind::LinearOrthonormal;
  Index patch = 4;
  Index dim = 8;
  std::uint64_t seed = 1;
  double gain = 1.0;
  Index hidden = 16;  // nonlinear encoder width
  bool zero_mean_basis = true;  // B orthogonal to per-channel constant patches
  Index codebook_size = 256;
  double codebook_spread = 1.0;
  CodebookLayout codebook_layout = CodebookLayout::Dispersed;

  Index patch_size() const { return 3 * patch * patch; }
  bool operator==(const ProfileSpec&) const = default;
};

/// Immutable encoder/decoder/codebook bundle.
class EncoderProfile {
 public:
  explicit EncoderProfile(const ProfileSpec& spec);
  EncoderProfile(const ProfileSpec& spec, Codebook codebook);

  const ProfileSpec& spec() const { return spec_; }
  EncoderKind kind() const { return spec_.kind; }
  Index patch() const { return spec_.patch; }
  Index dim() const { return spec_.dim; }
  const Codebook& codebook() const { return codebook_; }

  const Eigen::MatrixXd& decoder_basis() const { return basis_; }
  const Eigen::MatrixXd& pool() const { return pool_; }
  const Eigen::MatrixXd& w1() const { return w1_; }
  const Eigen::VectorXd& b1() const { return b1_; }
  const Eigen::MatrixXd& w2() const { return w2_; }
  const Eigen::VectorXd& b2() const { return b2_; }

  /// Largest |decode(z) - 0.5| over pixels for latents with |z_c| <= bound.
  double max_excursion(double bound) const;

 private:
  void build_weights();

  ProfileSpec spec_;
  Codebook codebook_;
  Eigen::MatrixXd basis_;
  Eigen::MatrixXd pool_;
  Eigen::MatrixXd w1_;
  Eigen::VectorXd b1_;
  Eigen::MatrixXd w2_;
  Eigen::VectorXd b2_;
};

/// Patch matrix (3p^2 x h*w), columns in raster order of cells.
Eigen::MatrixXd image_to_patches(const Image& image, Index patch);
Image patches_to_image(const Eigen::MatrixXd& patches, Index rows, Index cols, Index patch);

Latent encode(const Image& image, const EncoderProfile& profile);

/// Decode without the final clamp (the affine/linear image of the latent).
Image decode_unclamped(const Latent& latent, const EncoderProfile& profile);
Image decode(const Latent& latent, const EncoderProfile& profile);

/// Reverse-mode gradient of encode at `image`, contracted with an upstream
/// gradient on the latent.
Image encode_pullback(const Image& image, const EncoderProfile& profile, const Latent& grad_on_latent);

struct Quantization {
  TokenMap tokens;
  /// Per cell (raster order), codebook indices sorted by distance; ties go
  /// to the lower index.
  std::vector<std::vector<std::int32_t>> ranking;
};

/// Nearest codebook index per cell, lowest index on ties.
TokenMap quantize_nearest(const Latent& latent, const Codebook& codebook);

/// Nearest index plus full distance ranking per cell.
Quantization quantize(const Latent& latent, const Codebook& codebook);

Latent lookup(const TokenMap& tokens, const Codebook& codebook);

/// Attacker profile for a box setting: white = identical, grey = same kind
/// and shape with a different seed, black = the other encoder kind.
ProfileSpec attacker_spec(const ProfileSpec& verifier, BoxLevel level);

/// Checks the box-setting invariant between two profiles.
bool box_consistent(const ProfileSpec& verifier, const ProfileSpec& attacker, BoxLevel level);

const char* to_string(EncoderKind kind);
const char* to_string(BoxLevel level);
EncoderKind encoder_kind_from_string(const std::string& s);
BoxLevel box_level_from_string(const std::string& s);

nlohmann::json profile_to_json(const EncoderProfile& profile);
EncoderProfile profile_from_json(const nlohmann::json& doc);
nlohmann::json spec_to_json(const ProfileSpec& spec);
ProfileSpec spec_from_json(const nlohmann::json& doc);

}  // namespace wmlab
