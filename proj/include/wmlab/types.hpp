#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "wmlab/errors.hpp"

namespace wmlab {

using Index = Eigen::Index;

/// One spatial plane, rows = y, cols = x.
template <typename Scalar>
using PlaneT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
using Plane = PlaneT<double>;

/// H x W x 3 pixel grid. Valid images hold values in [0,1].
template <typename Scalar>
struct ImageT {
  std::array<PlaneT<Scalar>, 3> channels;

  ImageT() = default;
  ImageT(Index height, Index width, Scalar fill = Scalar(0)) {
    for (auto& c : channels) c = PlaneT<Scalar>::Constant(height, width, fill);
  }

  Index height() const { return channels[0].rows(); }
  Index width() const { return channels[0].cols(); }
  Index size() const { return 3 * height() * width(); }

  Scalar& operator()(int c, Index y, Index x) { return channels[c](y, x); }
  Scalar operator()(int c, Index y, Index x) const { return channels[c](y, x); }

  bool same_shape(const ImageT& other) const {
    return height() == other.height() && width() == other.width();
  }

  template <typename NewScalar>
  ImageT<NewScalar> cast() const {
    ImageT<NewScalar> out;
    for (int c = 0; c < 3; ++c) out.channels[c] = channels[c].template cast<NewScalar>();
    return out;
  }
};
using Image = ImageT<double>;

/// d x h x w real tensor stored as d planes.
template <typename Scalar>
struct LatentT {
  std::vector<PlaneT<Scalar>> channels;

  LatentT() = default;
  LatentT(Index dim, Index height, Index width, Scalar fill = Scalar(0))
      : channels(static_cast<std::size_t>(dim), PlaneT<Scalar>::Constant(height, width, fill)) {}

  Index dim() const { return static_cast<Index>(channels.size()); }
  Index height() const { return channels.empty() ? 0 : channels[0].rows(); }
  Index width() const { return channels.empty() ? 0 : channels[0].cols(); }

  Scalar& operator()(Index c, Index y, Index x) { return channels[c](y, x); }
  Scalar operator()(Index c, Index y, Index x) const { return channels[c](y, x); }

  bool same_shape(const LatentT& other) const {
    return dim() == other.dim() && height() == other.height() && width() == other.width();
  }

  /// Feature vector of one spatial cell.
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> cell(Index y, Index x) const {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> v(dim());
    for (Index c = 0; c < dim(); ++c) v[c] = channels[c](y, x);
    return v;
  }
  void set_cell(Index y, Index x, const Eigen::Ref<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>& v) {
    for (Index c = 0; c < dim(); ++c) channels[c](y, x) = v[c];
  }
};
using Latent = LatentT<double>;

/// |V| x d table of code vectors, one per row.
template <typename Scalar>
struct CodebookT {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> vectors;

  Index size() const { return vectors.rows(); }
  Index dim() const { return vectors.cols(); }
};
using Codebook = CodebookT<double>;

using TokenGrid = Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// h x w token indices. Raster order is the generation order.
struct TokenMap {
  TokenGrid indices;
  std::int32_t vocab_size = 0;

  TokenMap() = default;
  TokenMap(Index height, Index width, std::int32_t vocab)
      : indices(TokenGrid::Zero(height, width)), vocab_size(vocab) {}

  Index height() const { return indices.rows(); }
  Index width() const { return indices.cols(); }
  Index length() const { return indices.size(); }

  std::int32_t operator[](Index i) const { return indices.data()[i]; }
  std::int32_t& operator[](Index i) { return indices.data()[i]; }

  std::vector<std::int32_t> sequence() const {
    return {indices.data(), indices.data() + indices.size()};
  }

  /// Throws if any index is outside [0, vocab_size).
  void validate() const {
    for (Index i = 0; i < length(); ++i) {
      if ((*this)[i] < 0 || (*this)[i] >= vocab_size) throw ParameterError("token index out of range");
    }
  }
};

using BitSeq = std::vector<std::uint8_t>;

/// Output of every verifier.
struct DetectionReport {
  std::int64_t trials = 0;  // T
  std::int64_t green = 0;   // N_g
  double gamma = 0.0;
  double z = 0.0;
  double p = 1.0;
  double log10_p = 0.0;  // finite even when p underflows
  std::map<double, bool> detected_at;

  double green_fraction() const { return trials > 0 ? double(green) / double(trials) : 0.0; }
};

// Elementwise helpers.

template <typename Scalar>
ImageT<Scalar> operator+(const ImageT<Scalar>& a, const ImageT<Scalar>& b) {
  ImageT<Scalar> out;
  for (int c = 0; c < 3; ++c) out.channels[c] = a.channels[c] + b.channels[c];
  return out;
}

template <typename Scalar>
ImageT<Scalar> operator-(const ImageT<Scalar>& a, const ImageT<Scalar>& b) {
  ImageT<Scalar> out;
  for (int c = 0; c < 3; ++c) out.channels[c] = a.channels[c] - b.channels[c];
  return out;
}

template <typename Scalar>
ImageT<Scalar> operator*(Scalar s, const ImageT<Scalar>& a) {
  ImageT<Scalar> out;
  for (int c = 0; c < 3; ++c) out.channels[c] = s * a.channels[c];
  return out;
}

template <typename Scalar>
LatentT<Scalar> operator+(const LatentT<Scalar>& a, const LatentT<Scalar>& b) {
  LatentT<Scalar> out = a;
  for (Index c = 0; c < a.dim(); ++c) out.channels[c] += b.channels[c];
  return out;
}

template <typename Scalar>
LatentT<Scalar> operator-(const LatentT<Scalar>& a, const LatentT<Scalar>& b) {
  LatentT<Scalar> out = a;
  for (Index c = 0; c < a.dim(); ++c) out.channels[c] -= b.channels[c];
  return out;
}

template <typename Scalar>
LatentT<Scalar> operator*(Scalar s, const LatentT<Scalar>& a) {
  LatentT<Scalar> out = a;
  for (auto& ch : out.channels) ch *= s;
  return out;
}

template <typename Scalar>
Scalar squared_norm(const LatentT<Scalar>& a) {
  Scalar acc(0);
  for (const auto& ch : a.channels) acc += ch.squaredNorm();
  return acc;
}

template <typename Scalar>
Scalar max_abs_diff(const ImageT<Scalar>& a, const ImageT<Scalar>& b) {
  Scalar m(0);
  for (int c = 0; c < 3; ++c) m = std::max(m, (a.channels[c] - b.channels[c]).cwiseAbs().maxCoeff());
  return m;
}

template <typename Scalar>
Scalar max_abs_diff(const LatentT<Scalar>& a, const LatentT<Scalar>& b) {
  Scalar m(0);
  for (Index c = 0; c < a.dim(); ++c) m = std::max(m, (a.channels[c] - b.channels[c]).cwiseAbs().maxCoeff());
  return m;
}

template <typename Scalar>
ImageT<Scalar> clamp01(ImageT<Scalar> img) {
  for (auto& ch : img.channels) ch = ch.cwiseMax(Scalar(0)).cwiseMin(Scalar(1));
  return img;
}

template <typename Scalar>
bool in_unit_range(const ImageT<Scalar>& img) {
  for (const auto& ch : img.channels) {
    if (!ch.allFinite() || ch.minCoeff() < Scalar(0) || ch.maxCoeff() > Scalar(1)) return false;
  }
  return true;
}

/// Pixel-wise 8-bit quantization: round(v * 255) / 255.
template <typename Scalar>
ImageT<Scalar> quantize8(ImageT<Scalar> img) {
  for (auto& ch : img.channels) {
    ch = ch.unaryExpr([](Scalar v) {
      const Scalar clamped = std::min(Scalar(1), std::max(Scalar(0), v));
      return std::round(clamped * Scalar(255)) / Scalar(255);
    });
  }
  return img;
}

}  // namespace wmlab
