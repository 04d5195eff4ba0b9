#include "doctest.h"
#include "wmlab/hashing.hpp"
#include "wmlab/resize.hpp"

using namespace wmlab;

namespace {

Plane random_plane(Index r, Index c, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Plane p(r, c);
  for (Index i = 0; i < p.size(); ++i) p(i) = uniform01(rng) - 0.5;
  return p;
}

}  // namespace

TEST_CASE("2x2 to 1x1 bilinear is the mean") {
  Plane p(2, 2);
  p << 1, 3, 5, 7;
  const Plane q = resize_plane(p, 1, 1);
  CHECK(q(0, 0) == doctest::Approx(4.0).epsilon(1e-15));
}

TEST_CASE("1-D bilinear matches the hand-computed centre convention") {
  // n = 2 -> m = 4: sources -0.25 (clamped), 0.25, 0.75, 1.25 (clamped)
  Plane p(1, 2);
  p << 0.0, 1.0;
  const Plane q = resize_plane(p, 1, 4);
  CHECK(q(0, 0) == doctest::Approx(0.0));
  CHECK(q(0, 1) == doctest::Approx(0.25));
  CHECK(q(0, 2) == doctest::Approx(0.75));
  CHECK(q(0, 3) == doctest::Approx(1.0));
}

TEST_CASE("interpolation rows sum to one") {
  for (auto [n, m] : {std::pair<Index, Index>{3, 7}, {8, 3}, {5, 5}, {1, 4}, {16, 1}}) {
    const auto mat = bilinear_axis_matrix(n, m);
    const Eigen::MatrixXd dense(mat);
    for (Index j = 0; j < m; ++j) CHECK(dense.row(j).sum() == doctest::Approx(1.0));
  }
}

TEST_CASE("constant planes survive any resize") {
  const Plane p = Plane::Constant(5, 9, 0.37);
  for (auto mode : {Resample::Bilinear}) {
    const Plane q = resize_plane(p, 13, 4, mode);
    CHECK((q.array() - 0.37).abs().maxCoeff() < 1e-14);
  }
  const Plane b = resize_plane(Plane(Plane::Constant(4, 8, 0.2)), 2, 4, Resample::Block);
  CHECK((b.array() - 0.2).abs().maxCoeff() < 1e-15);
}

TEST_CASE("block enlarge then shrink is the identity") {
  const Plane u = random_plane(4, 4, 1);
  const Plane big = resize_plane(u, 16, 16, Resample::Block);
  CHECK(resize_plane(big, 4, 4, Resample::Block) == u);
  CHECK_THROWS_AS(resize_plane(u, 6, 6, Resample::Block), ParameterError);
}

TEST_CASE("adjoint satisfies <R u, v> = <u, R^T v>") {
  for (auto mode : {Resample::Bilinear, Resample::Block}) {
    const Plane u = random_plane(4, 8, 2);
    const Plane v = random_plane(16, 16, 3);
    const double lhs = (resize_plane(u, 16, 16, mode).array() * v.array()).sum();
    const double rhs = (u.array() * resize_plane_adjoint(v, 4, 8, mode).array()).sum();
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}
