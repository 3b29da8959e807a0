#pragma once

#include "lfsep/lf_model.hpp"

#include <vector>

namespace lfsep {

/// Forward-difference gradient of an unrolled h x w image. The output is the
/// x-differences followed by the y-differences (length 2*h*w); the last
/// column/row difference is zero (replicate boundary).
class GradientOperator {
 public:
  GradientOperator(int height, int width);

  int height() const { return height_; }
  int width() const { return width_; }
  Eigen::Index pixels() const { return static_cast<Eigen::Index>(height_) * width_; }

  RowVector apply(const RowVector& x) const;
  RowVector adjoint(const RowVector& y) const;
  /// Row-wise application to a K x (h*w) stack, giving K x (2*h*w).
  Matrix apply_rows(const Matrix& x) const;
  Matrix adjoint_rows(const Matrix& y) const;

  /// Solves (shift*I + D^T D) x = rhs for each row by conjugate gradients.
  /// `x` holds the initial guess on entry. Returns the worst relative residual.
  double solve_screened(double shift, const Matrix& rhs, Matrix& x, double rel_tol = 1e-8,
                        int max_iter = 500) const;

 private:
  void apply_into(const double* x, double* out) const;
  void adjoint_into(const double* y, double* out) const;

  int height_;
  int width_;
};

/// Convenience wrapper: D x for a single unrolled image.
RowVector gradient(const RowVector& x, int height, int width);

struct WarpedView {
  Image image;
  Mask valid;  // 1 where the sample location fell inside the source image
};

/// Backward warp V(p) = view(p - d(p) * phi) with bilinear sampling and
/// clamp-to-border.
WarpedView warp_view(const Image& view, const DisparityMap& d, GridOffset phi);

/// Warped stack I for every channel plus a K x (h*w) validity matrix.
/// Samples that fall outside their source view are replaced by the reference
/// view's value so that they carry no cross-view inconsistency.
struct WarpedStack {
  std::vector<LayerStack> channels;
  Matrix valid;

  int view_count() const { return static_cast<int>(valid.rows()); }
  int height() const { return channels.front().height; }
  int width() const { return channels.front().width; }
  /// Pixels of the reference view whose samples were valid in every view.
  Mask valid_everywhere() const;
};

WarpedStack build_stack(const LightField& lf, const DisparityMap& d);

/// Warped stack at a linearization point together with the per-view
/// derivative of each warped view with respect to disparity (one K x (h*w)
/// matrix per channel). Rows of the reference view and of invalid samples
/// are zero.
struct Linearization {
  WarpedStack stack;
  std::vector<Matrix> jacobian;
};

/// Step, in pixels of disparity, of the central difference used for the
/// warp derivative.
inline constexpr double kJacobianStep = 1e-3;

Linearization linearize(const LightField& lf, const DisparityMap& d);

/// Bilinear sample with coordinates clamped to the image.
double sample_bilinear(const Plane& plane, double x, double y);

}  // namespace lfsep
