#pragma once

#include "lfsep/image.hpp"

namespace lfsep::prox {

/// Singular value thresholding: the minimizer of
/// tau * ||X||_* + 0.5 * ||X - M||_F^2.
Matrix svt(const Matrix& m, double tau);

/// Same as svt but also reports the number of singular values that survive.
Matrix svt(const Matrix& m, double tau, int& rank);

/// sign(x) * max(|x| - tau, 0), elementwise.
Matrix soft_threshold(const Matrix& x, double tau);

/// Elementwise soft threshold with per-element threshold tau * w.
Matrix weighted_soft_threshold(const Matrix& x, double tau, const Matrix& w);

/// Euclidean projection onto the nonnegative orthant.
Matrix project_nonneg(const Matrix& m);

/// Elementwise minimizer of
///
///   lam2 * (dI - y - other)^2 + (mu/2) * (y - anchor)^2 + thresholds * |y|
///
/// which is the form of both gradient-auxiliary updates: the quadratic part
/// is completed to a square centred at
///   (2*lam2*(dI - other) + mu*anchor) / (2*lam2 + mu)
/// and the l1 part then shrinks it by thresholds / (2*lam2 + mu).
/// `thresholds` carries lam_sparse + lam_coupling * |other_factor| per element.
Matrix solve_quadratic_gradient(const Matrix& other, const Matrix& d_i, double lam2, double mu,
                                const Matrix& anchor, const Matrix& thresholds);

}  // namespace lfsep::prox
