#include "lfsep/warp.hpp"

#include <algorithm>
#include <cmath>

namespace lfsep {

GradientOperator::GradientOperator(int height, int width) : height_(height), width_(width) {
  if (height < 1 || width < 1) throw InputError("gradient operator needs positive dimensions");
}

void GradientOperator::apply_into(const double* x, double* out) const {
  const Eigen::Index n = pixels();
  double* gx = out;
  double* gy = out + n;
  for (int r = 0; r < height_; ++r) {
    const double* row = x + static_cast<Eigen::Index>(r) * width_;
    double* ox = gx + static_cast<Eigen::Index>(r) * width_;
    for (int c = 0; c + 1 < width_; ++c) ox[c] = row[c + 1] - row[c];
    ox[width_ - 1] = 0.0;
    double* oy = gy + static_cast<Eigen::Index>(r) * width_;
    if (r + 1 < height_) {
      const double* next = row + width_;
      for (int c = 0; c < width_; ++c) oy[c] = next[c] - row[c];
    } else {
      std::fill(oy, oy + width_, 0.0);
    }
  }
}

void GradientOperator::adjoint_into(const double* y, double* out) const {
  const Eigen::Index n = pixels();
  const double* gx = y;
  const double* gy = y + n;
  std::fill(out, out + n, 0.0);
  for (int r = 0; r < height_; ++r) {
    const Eigen::Index base = static_cast<Eigen::Index>(r) * width_;
    for (int c = 0; c + 1 < width_; ++c) {
      out[base + c] -= gx[base + c];
      out[base + c + 1] += gx[base + c];
    }
    if (r + 1 < height_) {
      for (int c = 0; c < width_; ++c) {
        out[base + c] -= gy[base + c];
        out[base + width_ + c] += gy[base + c];
      }
    }
  }
}

RowVector GradientOperator::apply(const RowVector& x) const {
  if (x.size() != pixels()) throw InputError("gradient: length mismatch");
  RowVector out(2 * pixels());
  apply_into(x.data(), out.data());
  return out;
}

RowVector GradientOperator::adjoint(const RowVector& y) const {
  if (y.size() != 2 * pixels()) throw InputError("gradient adjoint: length mismatch");
  RowVector out(pixels());
  adjoint_into(y.data(), out.data());
  return out;
}

Matrix GradientOperator::apply_rows(const Matrix& x) const {
  if (x.cols() != pixels()) throw InputError("gradient: length mismatch");
  Matrix out(x.rows(), 2 * pixels());
  for (Eigen::Index i = 0; i < x.rows(); ++i) apply_into(x.row(i).data(), out.row(i).data());
  return out;
}

Matrix GradientOperator::adjoint_rows(const Matrix& y) const {
  if (y.cols() != 2 * pixels()) throw InputError("gradient adjoint: length mismatch");
  Matrix out(y.rows(), pixels());
  for (Eigen::Index i = 0; i < y.rows(); ++i) adjoint_into(y.row(i).data(), out.row(i).data());
  return out;
}

double GradientOperator::solve_screened(double shift, const Matrix& rhs, Matrix& x, double rel_tol,
                                        int max_iter) const {
  if (shift <= 0.0) throw InputError("screened solve needs a positive shift");
  if (rhs.cols() != pixels()) throw InputError("screened solve: length mismatch");
  if (x.rows() != rhs.rows() || x.cols() != rhs.cols()) x = Matrix::Zero(rhs.rows(), rhs.cols());
  const Eigen::Index n = pixels();
  RowVector grad(2 * n);
  RowVector ap(n);
  auto apply_system = [&](const RowVector& v, RowVector& out) {
    apply_into(v.data(), grad.data());
    adjoint_into(grad.data(), out.data());
    out += shift * v;
  };
  double worst = 0.0;
  for (Eigen::Index i = 0; i < rhs.rows(); ++i) {
    const RowVector b = rhs.row(i);
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
      x.row(i).setZero();
      continue;
    }
    RowVector xi = x.row(i);
    apply_system(xi, ap);
    RowVector r = b - ap;
    RowVector p = r;
    double rr = r.squaredNorm();
    int it = 0;
    while (std::sqrt(rr) > rel_tol * bnorm && it < max_iter) {
      apply_system(p, ap);
      const double alpha = rr / p.dot(ap);
      xi += alpha * p;
      r -= alpha * ap;
      const double rr_new = r.squaredNorm();
      p = r + (rr_new / rr) * p;
      rr = rr_new;
      ++it;
    }
    x.row(i) = xi;
    worst = std::max(worst, std::sqrt(rr) / bnorm);
  }
  return worst;
}

RowVector gradient(const RowVector& x, int height, int width) {
  return GradientOperator(height, width).apply(x);
}

double sample_bilinear(const Plane& plane, double x, double y) {
  const int h = static_cast<int>(plane.rows());
  const int w = static_cast<int>(plane.cols());
  x = std::clamp(x, 0.0, static_cast<double>(w - 1));
  y = std::clamp(y, 0.0, static_cast<double>(h - 1));
  const int x0 = std::min(static_cast<int>(std::floor(x)), std::max(w - 2, 0));
  const int y0 = std::min(static_cast<int>(std::floor(y)), std::max(h - 2, 0));
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double top = (1.0 - fx) * plane(y0, x0) + fx * plane(y0, x1);
  const double bottom = (1.0 - fx) * plane(y1, x0) + fx * plane(y1, x1);
  return (1.0 - fy) * top + fy * bottom;
}

namespace {

constexpr double kBoundsSlack = 1e-9;

bool inside(double x, double y, int h, int w) {
  return x >= -kBoundsSlack && y >= -kBoundsSlack && x <= (w - 1) + kBoundsSlack && y <= (h - 1) + kBoundsSlack;
}

void check_disparity(const Image& view, const DisparityMap& d) {
  if (d.height() != view.height() || d.width() != view.width()) {
    throw InputError("warp: disparity is " + std::to_string(d.height()) + "x" + std::to_string(d.width()) +
                     " but view is " + std::to_string(view.height()) + "x" + std::to_string(view.width()));
  }
  if (!d.all_finite()) throw InputError("warp: disparity has non-finite values");
}

}  // namespace

WarpedView warp_view(const Image& view, const DisparityMap& d, GridOffset phi) {
  check_disparity(view, d);
  const int h = view.height();
  const int w = view.width();
  WarpedView out{view, Mask::Ones(h, w)};
  if (phi.is_zero()) return out;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double x = c - d(r, c) * phi.dcol;
      const double y = r - d(r, c) * phi.drow;
      out.valid(r, c) = inside(x, y, h, w) ? 1 : 0;
      for (int ch = 0; ch < view.channel_count(); ++ch) {
        out.image(r, c, ch) = sample_bilinear(view.channel(ch), x, y);
      }
    }
  }
  return out;
}

Mask WarpedStack::valid_everywhere() const {
  const RowVector all = valid.colwise().minCoeff();
  Mask m(height(), width());
  for (Eigen::Index k = 0; k < all.size(); ++k) m.data()[k] = all[k] > 0.5 ? 1 : 0;
  return m;
}

WarpedStack build_stack(const LightField& lf, const DisparityMap& d) {
  const int k = lf.view_count();
  const int h = lf.height();
  const int w = lf.width();
  const Eigen::Index n = static_cast<Eigen::Index>(h) * w;
  WarpedStack out;
  out.valid = Matrix::Ones(k, n);
  for (int ch = 0; ch < lf.channel_count(); ++ch) out.channels.push_back({Matrix(k, n), h, w});
  for (int i = 0; i < k; ++i) {
    const WarpedView wv = warp_view(lf.view(i), d, lf.offset(i));
    for (Eigen::Index p = 0; p < n; ++p) out.valid(i, p) = wv.valid.data()[p];
    for (int ch = 0; ch < lf.channel_count(); ++ch) {
      auto row = out.channels[static_cast<std::size_t>(ch)].data.row(i);
      row = unroll(wv.image.channel(ch));
      const Plane& ref = lf.reference().channel(ch);
      for (Eigen::Index p = 0; p < n; ++p) {
        if (wv.valid.data()[p] == 0) row[p] = ref.data()[p];
      }
    }
  }
  return out;
}

Linearization linearize(const LightField& lf, const DisparityMap& d) {
  Linearization lin{build_stack(lf, d), {}};
  const int k = lf.view_count();
  const int h = lf.height();
  const int w = lf.width();
  const Eigen::Index n = static_cast<Eigen::Index>(h) * w;
  for (int ch = 0; ch < lf.channel_count(); ++ch) lin.jacobian.push_back(Matrix::Zero(k, n));
  for (int i = 0; i < k; ++i) {
    const GridOffset phi = lf.offset(i);
    if (phi.is_zero()) continue;
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        const Eigen::Index p = static_cast<Eigen::Index>(r) * w + c;
        if (lin.stack.valid(i, p) < 0.5) continue;
        const double x = c - d(r, c) * phi.dcol;
        const double y = r - d(r, c) * phi.drow;
        const double sx = kJacobianStep * phi.dcol;
        const double sy = kJacobianStep * phi.drow;
        for (int ch = 0; ch < lf.channel_count(); ++ch) {
          const Plane& src = lf.view(i).channel(ch);
          // d/dd of src(p - d*phi): central difference along -phi.
          lin.jacobian[static_cast<std::size_t>(ch)](i, p) =
              (sample_bilinear(src, x - sx, y - sy) - sample_bilinear(src, x + sx, y + sy)) / (2.0 * kJacobianStep);
        }
      }
    }
  }
  return lin;
}

}  // namespace lfsep
