#pragma once

// Linear dynamic graph optimization on the Stiefel manifold.
//
// The dynamic adjacency is A = I + E E^T with E = ReLU(X) and is never formed.
// With F = X W the basis problem becomes
//
//   max Tr(W^T (X^T X + X^T E E^T X) W)   s.t.  W^T X^T X W = I
//
// which is solved by whitening with M = (X^T X)^{-1/2} and taking the top
// eigenvectors of M^T H M. Cost is O(n K^2 + K^3) for X in R^{n x K}.

#include <Eigen/Dense>

#include "dstsgnn/errors.hpp"
#include "dstsgnn/spectral.hpp"

namespace dstsgnn {

/// Node features X and nonnegative activation E, both n x K.
class DynamicGraphInput {
 public:
  DynamicGraphInput(Matrix x, Matrix e) : x_(std::move(x)), e_(std::move(e)) {
    detail::require(x_.rows() == e_.rows() && x_.cols() == e_.cols(), ErrorKind::Dimension,
                    "features " + detail::shape_str(x_.rows(), x_.cols()) + " vs activation " +
                        detail::shape_str(e_.rows(), e_.cols()));
    detail::require(e_.size() == 0 || e_.minCoeff() >= 0.0, ErrorKind::Dimension,
                    "activation must be nonnegative");
  }

  /// Standard constructor: E = ReLU(X).
  static DynamicGraphInput from_features(const Matrix& x) { return {x, x.cwiseMax(0.0)}; }

  const Matrix& x() const noexcept { return x_; }
  const Matrix& e() const noexcept { return e_; }
  Eigen::Index n() const noexcept { return x_.rows(); }
  Eigen::Index k() const noexcept { return x_.cols(); }

 private:
  Matrix x_;
  Matrix e_;
};

struct LdgosmResult {
  Matrix w;          // K x d
  Matrix f;          // n x d, F = X W
  double objective;  // Tr(W^T (X^T X + ridge I + X^T E E^T X) W)
  double ridge;
};

/// (I + E E^T) v in O(n K k).
inline Matrix dynamic_adjacency_apply(const DynamicGraphInput& inp, const Matrix& v) {
  detail::require(v.rows() == inp.n(), ErrorKind::Dimension,
                  "adjacency apply: operand has " + std::to_string(v.rows()) + " rows, graph has " +
                      std::to_string(inp.n()));
  return v + inp.e() * (inp.e().transpose() * v);
}

/// ridge = rel * Tr(X^T X) / K, floored at abs_floor.
inline double default_ridge(const Matrix& x, double rel = 1e-6, double abs_floor = 0.0) {
  const double k = x.cols() > 0 ? static_cast<double>(x.cols()) : 1.0;
  return std::max(rel * x.squaredNorm() / k, abs_floor);
}

/// Regularized objective for an arbitrary W (K x d); ridge = 0 gives the plain trace objective.
inline double ldgosm_objective(const DynamicGraphInput& inp, const Matrix& w, double ridge = 0.0) {
  detail::require(w.rows() == inp.k(), ErrorKind::Dimension,
                  "objective: W has " + std::to_string(w.rows()) + " rows, features have K=" +
                      std::to_string(inp.k()));
  const Matrix xw = inp.x() * w;
  const Matrix exw = inp.e().transpose() * xw;
  return xw.squaredNorm() + exw.squaredNorm() + ridge * w.squaredNorm();
}

/// Closed-form solve. out_dim defaults to K (square W); pass d < K for a thinner basis.
inline LdgosmResult ldgosm_solve(const DynamicGraphInput& inp, double ridge, Eigen::Index out_dim = -1) {
  const Eigen::Index k = inp.k();
  if (out_dim < 0) out_dim = k;
  detail::require(k >= 1 && out_dim >= 1 && out_dim <= k && out_dim <= inp.n(), ErrorKind::Dimension,
                  "ldgosm needs K >= d >= 1 and n >= d, got n=" + std::to_string(inp.n()) +
                      " K=" + std::to_string(k) + " d=" + std::to_string(out_dim));
  detail::require(ridge >= 0.0 && std::isfinite(ridge), ErrorKind::Config, "ridge must be finite and >= 0");
  const Matrix& x = inp.x();

  // 1. B = X^T X (+ ridge I) = D Λ D^T
  Matrix b = x.transpose() * x;
  b.diagonal().array() += ridge;
  Eigen::SelfAdjointEigenSolver<Matrix> b_eig(b);
  if (b_eig.info() != Eigen::Success) detail::fail(ErrorKind::EigFailure, "eigendecomposition of X^T X failed");
  const double lambda_min = b_eig.eigenvalues().minCoeff();
  if (!(lambda_min > 0.0))
    detail::fail(ErrorKind::RankDeficient, "X^T X + ridge I has smallest eigenvalue " + std::to_string(lambda_min));

  // 2. M = D Λ^{-1/2} D^T
  const Matrix& dv = b_eig.eigenvectors();
  const Matrix m = dv * b_eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() * dv.transpose();

  // 3-4. C = E^T X, H = B + C^T C
  const Matrix c = inp.e().transpose() * x;
  Matrix h = b;
  h.noalias() += c.transpose() * c;

  // 5. U = leading eigenvectors of M^T H M
  Matrix mhm = m.transpose() * h * m;
  mhm = 0.5 * (mhm + mhm.transpose()).eval();
  const SymmetricEigen u = symmetric_eigen(mhm);

  // 6. W = M U
  LdgosmResult out;
  out.w = m * u.vectors.leftCols(out_dim);
  out.f = x * out.w;
  out.objective = (out.w.transpose() * h * out.w).trace();
  out.ridge = ridge;
  if (!out.w.allFinite() || !out.f.allFinite())
    detail::fail(ErrorKind::EigFailure, "ldgosm produced non-finite output");
  return out;
}

}  // namespace dstsgnn
