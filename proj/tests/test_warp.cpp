#include "lfsep/synth.hpp"
#include "lfsep/warp.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <Eigen/SVD>
#include <cmath>

using namespace lfsep;

namespace {

// Independent scalar bilinear sampler with border clamping.
double oracle_sample(const Plane& img, double x, double y) {
  const int h = static_cast<int>(img.rows());
  const int w = static_cast<int>(img.cols());
  x = std::min(std::max(x, 0.0), w - 1.0);
  y = std::min(std::max(y, 0.0), h - 1.0);
  int x0 = static_cast<int>(x);
  int y0 = static_cast<int>(y);
  if (x0 == w - 1) --x0;
  if (y0 == h - 1) --y0;
  const double ax = x - x0;
  const double ay = y - y0;
  return img(y0, x0) * (1 - ax) * (1 - ay) + img(y0, x0 + 1) * ax * (1 - ay) + img(y0 + 1, x0) * (1 - ax) * ay +
         img(y0 + 1, x0 + 1) * ax * ay;
}

Plane gaussian_blob(int h, int w, double cx, double cy, double sigma) {
  Plane p(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) p(r, c) = std::exp(-((c - cx) * (c - cx) + (r - cy) * (r - cy)) / (2 * sigma * sigma));
  }
  return p;
}

LightField blob_lightfield() {
  std::vector<Image> views;
  for (const auto& phi : grid_offsets(3)) {
    views.push_back(Image::from_plane(gaussian_blob(24, 24, 11.5 + 0.7 * phi.dcol, 12.0 - 0.4 * phi.drow, 3.0)));
  }
  return LightField(views, 3);
}

// Dense matrix of D for an h x w image.
Matrix dense_gradient(int h, int w) {
  const int n = h * w;
  Matrix d = Matrix::Zero(2 * n, n);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const int p = r * w + c;
      if (c + 1 < w) {
        d(p, p + 1) = 1;
        d(p, p) = -1;
      }
      if (r + 1 < h) {
        d(n + p, p + w) = 1;
        d(n + p, p) = -1;
      }
    }
  }
  return d;
}

}  // namespace

TEST_CASE("zero disparity is the identity") {
  std::mt19937_64 rng(1);
  const Image v = Image::from_plane(testing::random_matrix(9, 11, rng, 0.0, 1.0));
  for (const auto& phi : grid_offsets(3)) {
    const auto out = warp_view(v, DisparityMap(9, 11, 0.0), phi);
    CHECK(out.image.channel(0) == v.channel(0));
    CHECK(out.valid.minCoeff() == 1);
  }
}

TEST_CASE("the reference offset is the identity for any disparity") {
  std::mt19937_64 rng(2);
  const Image v = Image::from_plane(testing::random_matrix(9, 11, rng, 0.0, 1.0));
  const DisparityMap d(testing::random_matrix(9, 11, rng, -3.0, 3.0));
  CHECK(warp_view(v, d, {0, 0}).image.channel(0) == v.channel(0));
}

TEST_CASE("unit shift of a ramp samples one column left") {
  Plane ramp(8, 8);
  for (int r = 0; r < 8; ++r) {
    for (int c = 0; c < 8; ++c) ramp(r, c) = 0.1 * c + 0.01 * r;
  }
  const auto out = warp_view(Image::from_plane(ramp), DisparityMap(8, 8, 1.0), {1, 0});
  for (int r = 0; r < 8; ++r) {
    for (int c = 0; c < 8; ++c) {
      const int src = std::max(c - 1, 0);
      CHECK(out.image(r, c) == doctest::Approx(ramp(r, src)).epsilon(1e-14));
      CHECK(out.valid(r, c) == (c >= 1 ? 1 : 0));
    }
  }
}

TEST_CASE("warp matches a scalar-loop oracle for random disparities") {
  std::mt19937_64 rng(3);
  const Plane img = testing::random_matrix(10, 13, rng, 0.0, 1.0);
  const Plane d = testing::random_matrix(10, 13, rng, -2.5, 2.5);
  for (const auto& phi : grid_offsets(5)) {
    const auto out = warp_view(Image::from_plane(img), DisparityMap(d), phi);
    for (int r = 0; r < 10; ++r) {
      for (int c = 0; c < 13; ++c) {
        const double x = c - d(r, c) * phi.dcol;
        const double y = r - d(r, c) * phi.drow;
        CHECK(out.image(r, c) == doctest::Approx(oracle_sample(img, x, y)).epsilon(1e-12));
        const bool inside = x >= 0 && y >= 0 && x <= 12 && y <= 9;
        CHECK(out.valid(r, c) == (inside ? 1 : 0));
      }
    }
  }
}

TEST_CASE("warp rejects a disparity of the wrong size") {
  CHECK_THROWS_AS(warp_view(Image(4, 4, 1), DisparityMap(3, 4), {1, 0}), InputError);
}

TEST_CASE("constant light field gives a rank-1 stack") {
  std::vector<Image> views(9, Image(8, 8, 1, 0.4));
  std::mt19937_64 rng(4);
  const auto st = build_stack(LightField(views, 3), DisparityMap(testing::random_matrix(8, 8, rng, -2, 2)));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(st.channels[0].data);
  CHECK(svd.singularValues()(1) <= 1e-12 * svd.singularValues()(0));
}

TEST_CASE("textured plane warped by its disparity aligns every row") {
  for (double dstar : {1.0, 2.0}) {
    auto spec = synth::planar_preset(0.0);
    spec.disparity = dstar;
    const auto inst = synth::render(spec);
    const auto st = build_stack(inst.lf, DisparityMap(64, 64, dstar));
    const Matrix& m = st.channels[0].data;
    for (int i = 0; i < 9; ++i) CHECK((m.row(i) - m.row(4)).cwiseAbs().maxCoeff() < 0.02);
  }
}

TEST_CASE("zero disparity on shifted copies is not low rank") {
  const auto inst = synth::render(synth::planar_preset(0.0));
  const auto st = build_stack(inst.lf, DisparityMap(64, 64, 0.0));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(st.channels[0].data);
  CHECK(svd.singularValues()(1) > 0.05 * svd.singularValues()(0));
}

TEST_CASE("gradient of a constant is zero") {
  CHECK(gradient(RowVector::Constant(12, 3.5), 3, 4).isZero(0.0));
}

TEST_CASE("gradient of a column ramp") {
  const int h = 4, w = 5;
  RowVector x(h * w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) x(r * w + c) = c;
  }
  const RowVector g = gradient(x, h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      CHECK(g(r * w + c) == (c + 1 < w ? 1.0 : 0.0));
      CHECK(g(h * w + r * w + c) == 0.0);
    }
  }
}

TEST_CASE("gradient matches the dense operator and its adjoint") {
  std::mt19937_64 rng(5);
  const int h = 6, w = 7;
  const Matrix dense = dense_gradient(h, w);
  const GradientOperator op(h, w);
  for (int trial = 0; trial < 10; ++trial) {
    const RowVector x = testing::random_matrix(1, h * w, rng).row(0);
    const RowVector y = testing::random_matrix(1, 2 * h * w, rng).row(0);
    CHECK((op.apply(x) - (dense * x.transpose()).transpose()).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((op.adjoint(y) - (dense.transpose() * y.transpose()).transpose()).cwiseAbs().maxCoeff() < 1e-14);
    const double lhs = op.apply(x).dot(y);
    const double rhs = x.dot(op.adjoint(y));
    CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(std::abs(lhs), 1.0));
  }
}

TEST_CASE("gradient is linear") {
  std::mt19937_64 rng(6);
  const GradientOperator op(5, 5);
  const RowVector x = testing::random_matrix(1, 25, rng).row(0);
  const RowVector y = testing::random_matrix(1, 25, rng).row(0);
  CHECK((op.apply(2.5 * x - 1.5 * y) - (2.5 * op.apply(x) - 1.5 * op.apply(y))).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("row-wise gradient matches single rows") {
  std::mt19937_64 rng(7);
  const GradientOperator op(4, 6);
  const Matrix x = testing::random_matrix(3, 24, rng);
  const Matrix dx = op.apply_rows(x);
  for (int i = 0; i < 3; ++i) CHECK((dx.row(i) - op.apply(x.row(i))).cwiseAbs().maxCoeff() == 0.0);
  const Matrix y = testing::random_matrix(3, 48, rng);
  const Matrix dty = op.adjoint_rows(y);
  for (int i = 0; i < 3; ++i) CHECK((dty.row(i) - op.adjoint(y.row(i))).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("screened solve matches a dense solve") {
  std::mt19937_64 rng(8);
  const int h = 5, w = 6;
  const Matrix dense = dense_gradient(h, w);
  const GradientOperator op(h, w);
  const Matrix rhs = testing::random_matrix(2, h * w, rng);
  Matrix x = Matrix::Zero(2, h * w);
  const double res = op.solve_screened(2.0, rhs, x, 1e-12);
  CHECK(res <= 1e-10);
  const Eigen::MatrixXd a = 2.0 * Eigen::MatrixXd::Identity(h * w, h * w) + dense.transpose() * dense;
  for (int i = 0; i < 2; ++i) {
    const Eigen::VectorXd expect = a.ldlt().solve(Eigen::VectorXd(rhs.row(i).transpose()));
    CHECK((x.row(i).transpose() - expect).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("jacobian vanishes for the reference view and constant views") {
  const LightField lf = blob_lightfield();
  const auto lin = linearize(lf, DisparityMap(24, 24, 0.5));
  CHECK(lin.jacobian[0].row(lf.ref_index()).isZero(0.0));

  std::vector<Image> flat(9, Image(6, 6, 1, 0.7));
  const auto lin_flat = linearize(LightField(flat, 3), DisparityMap(6, 6, 0.3));
  CHECK(lin_flat.jacobian[0].isZero(1e-12));
}

TEST_CASE("jacobian matches the analytic derivative of the bilinear warp") {
  // Away from cell boundaries the bilinear warp is a polynomial in d; compare
  // with a wide central difference of the oracle sampler.
  const LightField lf = blob_lightfield();
  const double d = 0.4;
  const auto lin = linearize(lf, DisparityMap(24, 24, d));
  for (int i = 0; i < 9; ++i) {
    const GridOffset phi = lf.offset(i);
    for (int r = 3; r < 21; r += 4) {
      for (int c = 3; c < 21; c += 4) {
        const double h = 0.05;
        const double fp = oracle_sample(lf.view(i).channel(0), c - (d + h) * phi.dcol, r - (d + h) * phi.drow);
        const double fm = oracle_sample(lf.view(i).channel(0), c - (d - h) * phi.dcol, r - (d - h) * phi.drow);
        CHECK(lin.jacobian[0](i, r * 24 + c) == doctest::Approx((fp - fm) / (2 * h)).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("Taylor error of the linearized warp is second order") {
  std::mt19937_64 rng(9);
  const LightField lf = blob_lightfield();
  // Linearization points strictly inside sampling cells (fractional offset in
  // [0.2, 0.8]) so steps up to 0.1 px stay within one bilinear patch.
  const DisparityMap d(testing::random_matrix(24, 24, rng, 0.2, 0.8));
  const auto lin = linearize(lf, d);
  auto taylor_error = [&](double eps) {
    DisparityMap de = d;
    de.values().array() += eps;
    const auto moved = build_stack(lf, de);
    const Matrix pred = lin.stack.channels[0].data + eps * lin.jacobian[0];
    return (moved.channels[0].data - pred).cwiseAbs().maxCoeff();
  };
  const double e1 = taylor_error(0.1);
  const double e2 = taylor_error(0.05);
  REQUIRE(e1 > 0.0);
  CHECK(e1 / e2 >= 3.5);
  CHECK(std::log2(e1 / e2) >= 1.8);
}
