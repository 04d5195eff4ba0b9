#pragma once

// Separable linear resampling of planes and latents.
//
// Bilinear convention ("edge-aligned"): pixel i of an n-sample axis covers
// [i, i+1) and is sampled at its center i + 0.5. Output sample j of an axis
// resized n -> m reads the input at source coordinate
//     s = (j + 0.5) * n / m - 0.5,   clamped to [0, n - 1],
// and linearly interpolates between floor(s) and floor(s) + 1. Each output
// row of the interpolation matrix sums to one.
//
// Block convention: integer-ratio box averaging when shrinking and
// replication when enlarging. block_resize(block_resize(u, big), small) == u.

#include <Eigen/Sparse>

#include <cmath>

#include "wmlab/errors.hpp"
#include "wmlab/types.hpp"

namespace wmlab {

enum class Resample { Bilinear, Block };

template <typename Scalar>
using InterpMatrix = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;

/// m x n matrix taking an n-sample axis to m samples (bilinear).
template <typename Scalar = double>
InterpMatrix<Scalar> bilinear_axis_matrix(Index n, Index m) {
  if (n < 1 || m < 1) throw ParameterError("bilinear_axis_matrix: sizes must be >= 1");
  std::vector<Eigen::Triplet<Scalar>> entries;
  entries.reserve(static_cast<std::size_t>(2 * m));
  const double scale = double(n) / double(m);
  for (Index j = 0; j < m; ++j) {
    double s = (double(j) + 0.5) * scale - 0.5;
    s = std::min(std::max(s, 0.0), double(n - 1));
    const auto i0 = static_cast<Index>(std::floor(s));
    const Index i1 = std::min(i0 + 1, n - 1);
    const double w = s - double(i0);
    if (i1 == i0 || w == 0.0) {
      entries.emplace_back(j, i0, Scalar(1));
    } else {
      entries.emplace_back(j, i0, Scalar(1.0 - w));
      entries.emplace_back(j, i1, Scalar(w));
    }
  }
  InterpMatrix<Scalar> mat(m, n);
  mat.setFromTriplets(entries.begin(), entries.end());
  return mat;
}

/// m x n matrix for the block convention; requires n % m == 0 or m % n == 0.
template <typename Scalar = double>
InterpMatrix<Scalar> block_axis_matrix(Index n, Index m) {
  if (n < 1 || m < 1) throw ParameterError("block_axis_matrix: sizes must be >= 1");
  std::vector<Eigen::Triplet<Scalar>> entries;
  if (n >= m) {
    if (n % m != 0) throw ParameterError("block resampling needs integer ratios");
    const Index r = n / m;
    for (Index j = 0; j < m; ++j)
      for (Index k = 0; k < r; ++k) entries.emplace_back(j, j * r + k, Scalar(1) / Scalar(r));
  } else {
    if (m % n != 0) throw ParameterError("block resampling needs integer ratios");
    const Index r = m / n;
    for (Index j = 0; j < m; ++j) entries.emplace_back(j, j / r, Scalar(1));
  }
  InterpMatrix<Scalar> mat(m, n);
  mat.setFromTriplets(entries.begin(), entries.end());
  return mat;
}

template <typename Scalar = double>
InterpMatrix<Scalar> axis_matrix(Resample mode, Index n, Index m) {
  return mode == Resample::Bilinear ? bilinear_axis_matrix<Scalar>(n, m) : block_axis_matrix<Scalar>(n, m);
}

/// Resamples one plane to rows x cols.
template <typename Scalar>
PlaneT<Scalar> resize_plane(const PlaneT<Scalar>& in, Index rows, Index cols, Resample mode = Resample::Bilinear) {
  if (in.rows() == rows && in.cols() == cols) return in;
  const InterpMatrix<Scalar> ry = axis_matrix<Scalar>(mode, in.rows(), rows);
  const InterpMatrix<Scalar> rx = axis_matrix<Scalar>(mode, in.cols(), cols);
  PlaneT<Scalar> tmp = ry * in;
  return (rx * tmp.transpose()).transpose();
}

/// Adjoint of resize_plane: maps a gradient on the resized plane back to the
/// input grid (in_rows x in_cols).
template <typename Scalar>
PlaneT<Scalar> resize_plane_adjoint(const PlaneT<Scalar>& grad, Index in_rows, Index in_cols,
                                    Resample mode = Resample::Bilinear) {
  if (grad.rows() == in_rows && grad.cols() == in_cols) return grad;
  const InterpMatrix<Scalar> ry = axis_matrix<Scalar>(mode, in_rows, grad.rows());
  const InterpMatrix<Scalar> rx = axis_matrix<Scalar>(mode, in_cols, grad.cols());
  PlaneT<Scalar> tmp = InterpMatrix<Scalar>(ry.transpose()) * grad;
  return (InterpMatrix<Scalar>(rx.transpose()) * tmp.transpose()).transpose();
}

/// Channel-wise bilinear resampling of a latent to (rows, cols).
template <typename Scalar>
LatentT<Scalar> bilinear_resize(const LatentT<Scalar>& latent, Index rows, Index cols) {
  LatentT<Scalar> out;
  out.channels.reserve(latent.channels.size());
  for (const auto& ch : latent.channels) out.channels.push_back(resize_plane(ch, rows, cols, Resample::Bilinear));
  return out;
}

template <typename Scalar>
LatentT<Scalar> resize_latent(const LatentT<Scalar>& latent, Index rows, Index cols, Resample mode) {
  LatentT<Scalar> out;
  out.channels.reserve(latent.channels.size());
  for (const auto& ch : latent.channels) out.channels.push_back(resize_plane(ch, rows, cols, mode));
  return out;
}

template <typename Scalar>
LatentT<Scalar> resize_latent_adjoint(const LatentT<Scalar>& grad, Index in_rows, Index in_cols, Resample mode) {
  LatentT<Scalar> out;
  out.channels.reserve(grad.channels.size());
  for (const auto& ch : grad.channels) out.channels.push_back(resize_plane_adjoint(ch, in_rows, in_cols, mode));
  return out;
}

template <typename Scalar>
ImageT<Scalar> resize_image(const ImageT<Scalar>& img, Index rows, Index cols) {
  ImageT<Scalar> out;
  for (int c = 0; c < 3; ++c) out.channels[c] = resize_plane(img.channels[c], rows, cols, Resample::Bilinear);
  return out;
}

}  // namespace wmlab
