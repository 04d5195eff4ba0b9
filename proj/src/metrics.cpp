#include "wmlab/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace wmlab {
namespace {

Eigen::VectorXd gaussian_window(Index size, double sigma) {
  Eigen::VectorXd w(size);
  const double center = 0.5 * double(size - 1);
  for (Index i = 0; i < size; ++i) w[i] = std::exp(-0.5 * std::pow((double(i) - center) / sigma, 2));
  return w / w.sum();
}

// Separable 'valid' filtering.
Plane filter_valid(const Plane& in, const Eigen::VectorXd& wy, const Eigen::VectorXd& wx) {
  const Index out_rows = in.rows() - wy.size() + 1;
  const Index out_cols = in.cols() - wx.size() + 1;
  Plane rows_done = Plane::Zero(out_rows, in.cols());
  for (Index k = 0; k < wy.size(); ++k) rows_done += wy[k] * in.middleRows(k, out_rows);
  Plane out = Plane::Zero(out_rows, out_cols);
  for (Index k = 0; k < wx.size(); ++k) out += wx[k] * rows_done.middleCols(k, out_cols);
  return out;
}

}  // namespace

double psnr(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw ShapeError("psnr: shape mismatch");
  double sse = 0.0;
  for (int c = 0; c < 3; ++c) sse += (a.channels[c] - b.channels[c]).squaredNorm();
  const double mse = sse / double(a.size());
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, -10.0 * std::log10(mse));
}

double ssim(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw ShapeError("ssim: shape mismatch");
  constexpr double c1 = 0.01 * 0.01;
  constexpr double c2 = 0.03 * 0.03;
  auto odd_at_most = [](Index n) { return std::min<Index>(11, n % 2 == 1 ? n : n - 1); };
  const Index wy_size = std::max<Index>(1, odd_at_most(a.height()));
  const Index wx_size = std::max<Index>(1, odd_at_most(a.width()));
  const Eigen::VectorXd wy = gaussian_window(wy_size, 1.5);
  const Eigen::VectorXd wx = gaussian_window(wx_size, 1.5);

  double total = 0.0;
  for (int c = 0; c < 3; ++c) {
    const Plane& x = a.channels[c];
    const Plane& y = b.channels[c];
    const Plane mu_x = filter_valid(x, wy, wx);
    const Plane mu_y = filter_valid(y, wy, wx);
    const Plane sxx = filter_valid(x.cwiseProduct(x), wy, wx) - mu_x.cwiseProduct(mu_x);
    const Plane syy = filter_valid(y.cwiseProduct(y), wy, wx) - mu_y.cwiseProduct(mu_y);
    const Plane sxy = filter_valid(x.cwiseProduct(y), wy, wx) - mu_x.cwiseProduct(mu_y);
    const Plane num = (2.0 * mu_x.cwiseProduct(mu_y).array() + c1) * (2.0 * sxy.array() + c2);
    const Plane den = (mu_x.cwiseAbs2().array() + mu_y.cwiseAbs2().array() + c1) * (sxx.array() + syy.array() + c2);
    total += (num.array() / den.array()).mean();
  }
  return total / 3.0;
}

}  // namespace wmlab
