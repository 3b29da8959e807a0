#include "lfsep/prox.hpp"

#include <Eigen/SVD>

#include <cmath>

namespace lfsep::prox {

Matrix svt(const Matrix& m, double tau, int& rank) {
  if (tau < 0.0) throw InputError("svt: negative threshold");
  if (!m.allFinite()) throw InputError("svt: non-finite input");
  if (tau == 0.0) {
    rank = -1;
    return m;
  }
  // Decompose the tall orientation; stacks are K x (h*w) with K small.
  const bool wide = m.cols() > m.rows();
  const Eigen::MatrixXd tall = wide ? Eigen::MatrixXd(m.transpose()) : Eigen::MatrixXd(m);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(tall, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw InputError("svt: SVD failed");
  const Eigen::VectorXd shrunk = (svd.singularValues().array() - tau).cwiseMax(0.0);
  rank = static_cast<int>((shrunk.array() > 0.0).count());
  if (rank == 0) return Matrix::Zero(m.rows(), m.cols());
  const Eigen::MatrixXd u = svd.matrixU().leftCols(rank);
  const Eigen::MatrixXd v = svd.matrixV().leftCols(rank);
  const Eigen::MatrixXd out = u * shrunk.head(rank).asDiagonal() * v.transpose();
  if (wide) return out.transpose();
  return out;
}

Matrix svt(const Matrix& m, double tau) {
  int rank = 0;
  return svt(m, tau, rank);
}

Matrix soft_threshold(const Matrix& x, double tau) {
  if (tau < 0.0) throw InputError("soft_threshold: negative threshold");
  return x.unaryExpr([tau](double v) { return std::copysign(std::max(std::abs(v) - tau, 0.0), v); });
}

Matrix weighted_soft_threshold(const Matrix& x, double tau, const Matrix& w) {
  if (tau < 0.0) throw InputError("weighted_soft_threshold: negative threshold");
  if (w.rows() != x.rows() || w.cols() != x.cols()) throw InputError("weighted_soft_threshold: shape mismatch");
  return x.binaryExpr(w, [tau](double v, double wt) {
    return std::copysign(std::max(std::abs(v) - tau * wt, 0.0), v);
  });
}

Matrix project_nonneg(const Matrix& m) { return m.cwiseMax(0.0); }

Matrix solve_quadratic_gradient(const Matrix& other, const Matrix& d_i, double lam2, double mu,
                                const Matrix& anchor, const Matrix& thresholds) {
  if (!(mu > 0.0)) throw InputError("solve_quadratic_gradient: mu must be positive");
  if (lam2 < 0.0) throw InputError("solve_quadratic_gradient: lam2 must be nonnegative");
  const auto same = [&](const Matrix& a) { return a.rows() == d_i.rows() && a.cols() == d_i.cols(); };
  if (!same(other) || !same(anchor) || !same(thresholds)) {
    throw InputError("solve_quadratic_gradient: shape mismatch");
  }
  const double denom = 2.0 * lam2 + mu;
  const Matrix centre = (2.0 * lam2 * (d_i - other) + mu * anchor) / denom;
  return weighted_soft_threshold(centre, 1.0 / denom, thresholds);
}

}  // namespace lfsep::prox
