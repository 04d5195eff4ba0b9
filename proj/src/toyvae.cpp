#include "wmlab/toyvae.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wmlab/hashing.hpp"

namespace wmlab {
namespace {

constexpr int kPlacementRetries = 10000;

enum SeedTag : std::uint64_t { kCodebookTag = 1, kBasisTag = 2, kEncoderTag = 3, kGreyTag = 0x67726579, kBlackTag = 0x626c6b };

Eigen::VectorXd uniform_point(SplitMix64& rng, Index dim, double spread) {
  Eigen::VectorXd v(dim);
  for (Index k = 0; k < dim; ++k) v[k] = spread * (2.0 * uniform01(rng) - 1.0);
  return v;
}

Eigen::MatrixXd gaussian_matrix(SplitMix64& rng, Index rows, Index cols, double sd) {
  Eigen::MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = sd * standard_normal(rng);
  return m;
}

// Seeded matrix with orthonormal columns. With `patch` > 0 the columns are
// also orthogonal to the three per-channel constant patches.
Eigen::MatrixXd orthonormal_columns(SplitMix64& rng, Index rows, Index cols, Index patch = 0) {
  Eigen::MatrixXd g = gaussian_matrix(rng, rows, cols, 1.0);
  if (patch > 0) {
    const Index block = patch * patch;
    for (Index c = 0; c < 3; ++c) g.middleRows(c * block, block).rowwise() -= g.middleRows(c * block, block).colwise().mean();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
  for (Index j = 0; j < cols; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

Eigen::MatrixXd latent_to_matrix(const Latent& latent) {
  Eigen::MatrixXd z(latent.dim(), latent.height() * latent.width());
  for (Index c = 0; c < latent.dim(); ++c) {
    const Plane& ch = latent.channels[c];
    for (Index y = 0; y < ch.rows(); ++y)
      for (Index x = 0; x < ch.cols(); ++x) z(c, y * ch.cols() + x) = ch(y, x);
  }
  return z;
}

Latent matrix_to_latent(const Eigen::MatrixXd& z, Index rows, Index cols) {
  Latent latent(z.rows(), rows, cols);
  for (Index c = 0; c < z.rows(); ++c)
    for (Index y = 0; y < rows; ++y)
      for (Index x = 0; x < cols; ++x) latent(c, y, x) = z(c, y * cols + x);
  return latent;
}

void check_latent_shape(const Latent& latent, const EncoderProfile& profile) {
  if (latent.dim() != profile.dim()) throw ShapeError("latent dim does not match profile");
}

}  // namespace

double codebook_distance_floor(Index size, Index dim, double spread) {
  return 0.2 * spread * std::pow(double(size), -1.0 / double(dim));
}

Codebook build_codebook(std::uint64_t seed, Index size, Index dim, double spread) {
  if (size < 2) throw ParameterError("build_codebook: size must be >= 2");
  if (dim < 1 || !(spread > 0)) throw ParameterError("build_codebook: bad dim or spread");
  const double floor2 = std::pow(codebook_distance_floor(size, dim, spread), 2);
  SplitMix64 rng(seed);
  Codebook cb;
  cb.vectors.resize(size, dim);
  for (Index i = 0; i < size; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementRetries && !placed; ++attempt) {
      const Eigen::VectorXd v = uniform_point(rng, dim, spread);
      placed = true;
      for (Index j = 0; j < i; ++j) {
        if ((cb.vectors.row(j).transpose() - v).squaredNorm() < floor2) {
          placed = false;
          break;
        }
      }
      if (placed) cb.vectors.row(i) = v.transpose();
    }
    if (!placed) throw ConstructionError("build_codebook: distance floor unsatisfiable within retry budget");
  }
  return cb;
}

Codebook build_paired_codebook(std::uint64_t seed, Index size, Index dim, double spread) {
  if (size < 2) throw ParameterError("build_paired_codebook: size must be >= 2");
  const Index pairs = size / 2;
  const Index centers_count = pairs + size % 2;
  SplitMix64 rng(derive_seed(seed, 7));
  Codebook centers = centers_count >= 2 ? build_codebook(seed, centers_count, dim, spread)
                                        : Codebook{uniform_point(rng, dim, spread).transpose()};
  double min_dist = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < centers.size(); ++i)
    for (Index j = i + 1; j < centers.size(); ++j)
      min_dist = std::min(min_dist, (centers.vectors.row(i) - centers.vectors.row(j)).norm());
  const double radius = std::isfinite(min_dist) ? min_dist / 8.0 : spread / 8.0;

  Eigen::MatrixXd raw(size, dim);
  for (Index k = 0; k < pairs; ++k) {
    Eigen::VectorXd u(dim);
    for (Index t = 0; t < dim; ++t) u[t] = standard_normal(rng);
    u.normalize();
    raw.row(2 * k) = centers.vectors.row(k) + radius * u.transpose();
    raw.row(2 * k + 1) = centers.vectors.row(k) - radius * u.transpose();
  }
  if (size % 2 == 1) raw.row(size - 1) = centers.vectors.row(pairs);

  std::vector<Index> perm(static_cast<std::size_t>(size));
  std::iota(perm.begin(), perm.end(), 0);
  for (Index i = size - 1; i > 0; --i) {
    const auto j = static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(i + 1)));
    std::swap(perm[i], perm[j]);
  }
  Codebook cb;
  cb.vectors.resize(size, dim);
  for (Index i = 0; i < size; ++i) cb.vectors.row(perm[i]) = raw.row(i);
  return cb;
}

EncoderProfile::EncoderProfile(const ProfileSpec& spec) : spec_(spec) {
  const std::uint64_t cb_seed = derive_seed(spec.seed, kCodebookTag);
  codebook_ = spec.codebook_layout == CodebookLayout::Paired
                  ? build_paired_codebook(cb_seed, spec.codebook_size, spec.dim, spec.codebook_spread)
                  : build_codebook(cb_seed, spec.codebook_size, spec.dim, spec.codebook_spread);
  build_weights();
}

EncoderProfile::EncoderProfile(const ProfileSpec& spec, Codebook codebook) : spec_(spec), codebook_(std::move(codebook)) {
  if (codebook_.dim() != spec.dim) throw ShapeError("codebook dim does not match profile dim");
  spec_.codebook_size = codebook_.size();
  build_weights();
}

void EncoderProfile::build_weights() {
  const ProfileSpec& s = spec_;
  if (s.patch < 1 || s.dim < 1) throw ParameterError("profile: patch and dim must be >= 1");
  if (s.dim > s.patch_size() - (s.zero_mean_basis ? 3 : 0))
    throw ParameterError("profile: dim exceeds the available patch directions");
  if (!(s.gain > 0)) throw ParameterError("profile: gain must be positive");

  SplitMix64 basis_rng(derive_seed(s.seed, kBasisTag));
  basis_ = orthonormal_columns(basis_rng, s.patch_size(), s.dim, s.zero_mean_basis ? s.patch : 0);

  if (s.kind != EncoderKind::Nonlinear) return;
  if (s.hidden < 1) throw ParameterError("profile: hidden width must be >= 1");
  const Index q = s.patch % 2 == 0 ? 2 : 1;
  const Index sub = s.patch / q;
  const Index features = 3 * q * q;
  pool_ = Eigen::MatrixXd::Zero(features, s.patch_size());
  for (Index c = 0; c < 3; ++c)
    for (Index dy = 0; dy < s.patch; ++dy)
      for (Index dx = 0; dx < s.patch; ++dx) {
        const Index f = (c * q + dy / sub) * q + dx / sub;
        pool_(f, (c * s.patch + dy) * s.patch + dx) = 1.0 / double(sub * sub);
      }

  SplitMix64 rng(derive_seed(s.seed, kEncoderTag));
  w1_ = gaussian_matrix(rng, s.hidden, features, 3.0 / std::sqrt(double(features)));
  b1_ = gaussian_matrix(rng, s.hidden, 1, 0.25);
  w2_ = gaussian_matrix(rng, s.dim, s.hidden, 1.0 / std::sqrt(double(s.hidden)));
  b2_ = gaussian_matrix(rng, s.dim, 1, 0.1);
}

double EncoderProfile::max_excursion(double bound) const {
  return spec_.gain * bound * basis_.cwiseAbs().rowwise().sum().maxCoeff();
}

Eigen::MatrixXd image_to_patches(const Image& image, Index patch) {
  if (image.height() % patch != 0 || image.width() % patch != 0)
    throw ShapeError("image dimensions are not divisible by the patch size");
  const Index rows = image.height() / patch;
  const Index cols = image.width() / patch;
  Eigen::MatrixXd p(3 * patch * patch, rows * cols);
  for (Index y = 0; y < rows; ++y)
    for (Index x = 0; x < cols; ++x)
      for (int c = 0; c < 3; ++c)
        for (Index dy = 0; dy < patch; ++dy)
          for (Index dx = 0; dx < patch; ++dx)
            p((c * patch + dy) * patch + dx, y * cols + x) = image(c, y * patch + dy, x * patch + dx);
  return p;
}

Image patches_to_image(const Eigen::MatrixXd& patches, Index rows, Index cols, Index patch) {
  Image image(rows * patch, cols * patch);
  for (Index y = 0; y < rows; ++y)
    for (Index x = 0; x < cols; ++x)
      for (int c = 0; c < 3; ++c)
        for (Index dy = 0; dy < patch; ++dy)
          for (Index dx = 0; dx < patch; ++dx)
            image(c, y * patch + dy, x * patch + dx) = patches((c * patch + dy) * patch + dx, y * cols + x);
  return image;
}

Latent encode(const Image& image, const EncoderProfile& profile) {
  const Index p = profile.patch();
  const Eigen::MatrixXd patches = image_to_patches(image, p);
  const Index rows = image.height() / p;
  const Index cols = image.width() / p;
  if (profile.kind() == EncoderKind::LinearOrthonormal) {
    const Eigen::MatrixXd z = profile.decoder_basis().transpose() * (patches.array() - 0.5).matrix() / profile.spec().gain;
    return matrix_to_latent(z, rows, cols);
  }
  const Eigen::MatrixXd features = (profile.pool() * patches).array() - 0.5;
  const Eigen::MatrixXd hidden = ((profile.w1() * features).colwise() + profile.b1()).array().tanh();
  const Eigen::MatrixXd z = (profile.w2() * hidden).colwise() + profile.b2();
  return matrix_to_latent(z, rows, cols);
}

Image decode_unclamped(const Latent& latent, const EncoderProfile& profile) {
  check_latent_shape(latent, profile);
  const Eigen::MatrixXd z = latent_to_matrix(latent);
  const Eigen::MatrixXd patches = ((profile.spec().gain * profile.decoder_basis() * z).array() + 0.5).matrix();
  return patches_to_image(patches, latent.height(), latent.width(), profile.patch());
}

Image decode(const Latent& latent, const EncoderProfile& profile) {
  return clamp01(decode_unclamped(latent, profile));
}

Image encode_pullback(const Image& image, const EncoderProfile& profile, const Latent& grad_on_latent) {
  check_latent_shape(grad_on_latent, profile);
  const Index p = profile.patch();
  if (grad_on_latent.height() * p != image.height() || grad_on_latent.width() * p != image.width())
    throw ShapeError("encode_pullback: gradient shape does not match image");
  const Eigen::MatrixXd gz = latent_to_matrix(grad_on_latent);
  Eigen::MatrixXd gp;
  if (profile.kind() == EncoderKind::LinearOrthonormal) {
    gp = profile.decoder_basis() * gz / profile.spec().gain;
  } else {
    const Eigen::MatrixXd patches = image_to_patches(image, p);
    const Eigen::MatrixXd features = (profile.pool() * patches).array() - 0.5;
    const Eigen::ArrayXXd hidden = ((profile.w1() * features).colwise() + profile.b1()).array().tanh();
    const Eigen::ArrayXXd gh = (profile.w2().transpose() * gz).array();
    const Eigen::MatrixXd ga = (gh * (1.0 - hidden.square())).matrix();
    gp = profile.pool().transpose() * (profile.w1().transpose() * ga);
  }
  return patches_to_image(gp, grad_on_latent.height(), grad_on_latent.width(), p);
}

TokenMap quantize_nearest(const Latent& latent, const Codebook& codebook) {
  if (latent.dim() != codebook.dim()) throw ShapeError("quantize: latent dim does not match codebook");
  const Eigen::MatrixXd z = latent_to_matrix(latent);
  TokenMap tokens(latent.height(), latent.width(), static_cast<std::int32_t>(codebook.size()));
  for (Index cell = 0; cell < z.cols(); ++cell) {
    std::int32_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Index v = 0; v < codebook.size(); ++v) {
      const double d = (codebook.vectors.row(v).transpose() - z.col(cell)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = static_cast<std::int32_t>(v);
      }
    }
    tokens[cell] = best;
  }
  return tokens;
}

Quantization quantize(const Latent& latent, const Codebook& codebook) {
  if (latent.dim() != codebook.dim()) throw ShapeError("quantize: latent dim does not match codebook");
  const Eigen::MatrixXd z = latent_to_matrix(latent);
  Quantization q;
  q.tokens = TokenMap(latent.height(), latent.width(), static_cast<std::int32_t>(codebook.size()));
  q.ranking.resize(static_cast<std::size_t>(z.cols()));
  std::vector<double> dist(static_cast<std::size_t>(codebook.size()));
  for (Index cell = 0; cell < z.cols(); ++cell) {
    for (Index v = 0; v < codebook.size(); ++v) dist[v] = (codebook.vectors.row(v).transpose() - z.col(cell)).squaredNorm();
    auto& order = q.ranking[cell];
    order.resize(dist.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) { return dist[a] < dist[b]; });
    q.tokens[cell] = order.front();
  }
  return q;
}

Latent lookup(const TokenMap& tokens, const Codebook& codebook) {
  Latent latent(codebook.dim(), tokens.height(), tokens.width());
  for (Index y = 0; y < tokens.height(); ++y)
    for (Index x = 0; x < tokens.width(); ++x) {
      const std::int32_t t = tokens.indices(y, x);
      if (t < 0 || t >= codebook.size()) throw ParameterError("lookup: token index out of range");
      for (Index c = 0; c < codebook.dim(); ++c) latent(c, y, x) = codebook.vectors(t, c);
    }
  return latent;
}

ProfileSpec attacker_spec(const ProfileSpec& verifier, BoxLevel level) {
  ProfileSpec s = verifier;
  switch (level) {
    case BoxLevel::White:
      break;
    case BoxLevel::Grey:
      s.seed = derive_seed(verifier.seed, kGreyTag);
      break;
    case BoxLevel::Black:
      s.seed = derive_seed(verifier.seed, kBlackTag);
      s.kind = verifier.kind == EncoderKind::LinearOrthonormal ? EncoderKind::Nonlinear : EncoderKind::LinearOrthonormal;
      break;
  }
  return s;
}

bool box_consistent(const ProfileSpec& verifier, const ProfileSpec& attacker, BoxLevel level) {
  switch (level) {
    case BoxLevel::White:
      return verifier == attacker;
    case BoxLevel::Grey:
      return verifier.kind == attacker.kind && verifier.patch == attacker.patch && verifier.dim == attacker.dim &&
             verifier.seed != attacker.seed;
    case BoxLevel::Black:
      return verifier.kind != attacker.kind || verifier.patch != attacker.patch;
  }
  return false;
}

const char* to_string(EncoderKind kind) {
  return kind == EncoderKind::LinearOrthonormal ? "linear-orthonormal" : "nonlinear";
}

const char* to_string(BoxLevel level) {
  switch (level) {
    case BoxLevel::White:
      return "white";
    case BoxLevel::Grey:
      return "grey";
    case BoxLevel::Black:
      return "black";
  }
  return "?";
}

EncoderKind encoder_kind_from_string(const std::string& s) {
  if (s == "linear-orthonormal") return EncoderKind::LinearOrthonormal;
  if (s == "nonlinear") return EncoderKind::Nonlinear;
  throw FormatError("unknown encoder kind: " + s);
}

BoxLevel box_level_from_string(const std::string& s) {
  if (s == "white") return BoxLevel::White;
  if (s == "grey" || s == "gray") return BoxLevel::Grey;
  if (s == "black") return BoxLevel::Black;
  throw FormatError("unknown box setting: " + s);
}

nlohmann::json spec_to_json(const ProfileSpec& spec) {
  return {{"kind", to_string(spec.kind)},
          {"patch", spec.patch},
          {"dim", spec.dim},
          {"seed", spec.seed},
          {"gain", spec.gain},
          {"hidden", spec.hidden},
          {"zero_mean_basis", spec.zero_mean_basis},
          {"codebook_size", spec.codebook_size},
          {"codebook_spread", spec.codebook_spread},
          {"codebook_layout", spec.codebook_layout == CodebookLayout::Paired ? "paired" : "dispersed"}};
}

ProfileSpec spec_from_json(const nlohmann::json& doc) {
  ProfileSpec s;
  s.kind = encoder_kind_from_string(doc.value("kind", std::string("linear-orthonormal")));
  s.patch = doc.value("patch", s.patch);
  s.dim = doc.value("dim", s.dim);
  s.seed = doc.value("seed", s.seed);
  s.gain = doc.value("gain", s.gain);
  s.hidden = doc.value("hidden", s.hidden);
  s.zero_mean_basis = doc.value("zero_mean_basis", s.zero_mean_basis);
  s.codebook_size = doc.value("codebook_size", s.codebook_size);
  s.codebook_spread = doc.value("codebook_spread", s.codebook_spread);
  const std::string layout = doc.value("codebook_layout", std::string("dispersed"));
  if (layout != "paired" && layout != "dispersed") throw FormatError("unknown codebook layout: " + layout);
  s.codebook_layout = layout == "paired" ? CodebookLayout::Paired : CodebookLayout::Dispersed;
  return s;
}

nlohmann::json profile_to_json(const EncoderProfile& profile) {
  nlohmann::json doc = spec_to_json(profile.spec());
  nlohmann::json values = nlohmann::json::array();
  const Codebook& cb = profile.codebook();
  for (Index v = 0; v < cb.size(); ++v) {
    std::vector<double> row(static_cast<std::size_t>(cb.dim()));
    for (Index c = 0; c < cb.dim(); ++c) row[c] = cb.vectors(v, c);
    values.push_back(row);
  }
  doc["codebook"] = values;
  return doc;
}

EncoderProfile profile_from_json(const nlohmann::json& doc) {
  const ProfileSpec spec = spec_from_json(doc);
  if (!doc.contains("codebook")) return EncoderProfile(spec);
  const auto& values = doc.at("codebook");
  if (!values.is_array() || values.empty()) throw FormatError("profile codebook must be a non-empty array");
  Codebook cb;
  cb.vectors.resize(static_cast<Index>(values.size()), spec.dim);
  for (std::size_t v = 0; v < values.size(); ++v) {
    const auto row = values[v].get<std::vector<double>>();
    if (static_cast<Index>(row.size()) != spec.dim) throw FormatError("codebook row has wrong dimension");
    for (Index c = 0; c < spec.dim; ++c) cb.vectors(static_cast<Index>(v), c) = row[c];
  }
  return EncoderProfile(spec, std::move(cb));
}

}  // namespace wmlab
