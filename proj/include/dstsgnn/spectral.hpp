#pragma once

// Stiefel graph spectral primitives: the SGFT / ISGFT pair, Stiefel graph
// spectral convolution, and the eigen-route basis of the normalized adjacency.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "dstsgnn/errors.hpp"

namespace dstsgnn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

/// n x d matrix with orthonormal columns.
class StiefelBasis {
 public:
  static constexpr double kTolerance = 1e-8;

  /// Validates ||F^T F - I||_F < kTolerance and d <= n.
  explicit StiefelBasis(Matrix f) : f_(std::move(f)) {
    detail::require(f_.cols() <= f_.rows(), ErrorKind::Dimension,
                    "Stiefel basis needs d <= n, got " + detail::shape_str(f_.rows(), f_.cols()));
    detail::require(f_.cols() >= 1, ErrorKind::Dimension, "Stiefel basis needs d >= 1");
    detail::require(orthonormality_defect() < kTolerance, ErrorKind::Dimension,
                    "columns are not orthonormal (defect " + std::to_string(orthonormality_defect()) +
                        ")");
  }

  /// Wraps F without the orthonormality check. LDGOSM output is orthonormal
  /// under the ridge-regularized metric only, so the model path uses this.
  static StiefelBasis trusted(Matrix f) {
    StiefelBasis b;
    b.f_ = std::move(f);
    return b;
  }

  const Matrix& matrix() const noexcept { return f_; }
  Eigen::Index n() const noexcept { return f_.rows(); }
  Eigen::Index d() const noexcept { return f_.cols(); }

  double orthonormality_defect() const {
    return (f_.transpose() * f_ - Matrix::Identity(f_.cols(), f_.cols())).norm();
  }

 private:
  StiefelBasis() = default;
  Matrix f_;
};

/// Undirected weighted graph: symmetric nonnegative adjacency plus row-sum degrees.
class GraphSpec {
 public:
  explicit GraphSpec(Matrix adjacency) : a_(std::move(adjacency)) {
    detail::require(a_.rows() == a_.cols(), ErrorKind::Dimension,
                    "adjacency must be square, got " + detail::shape_str(a_.rows(), a_.cols()));
    detail::require(a_.allFinite(), ErrorKind::Dimension, "adjacency has non-finite entries");
    detail::require((a_ - a_.transpose()).cwiseAbs().maxCoeff() <= 1e-12, ErrorKind::Dimension,
                    "adjacency is not symmetric");
    detail::require(a_.minCoeff() >= 0.0, ErrorKind::Dimension, "adjacency has negative entries");
    degree_ = a_.rowwise().sum();
  }

  const Matrix& adjacency() const noexcept { return a_; }
  const Vector& degree() const noexcept { return degree_; }
  Eigen::Index n() const noexcept { return a_.rows(); }

 private:
  Matrix a_;
  Vector degree_;
};

/// Eigenpairs of a symmetric matrix, eigenvalues descending. Each eigenvector's
/// entry of largest magnitude is positive; ties in eigenvalue keep solver order.
struct SymmetricEigen {
  Vector values;
  Matrix vectors;
};

inline SymmetricEigen symmetric_eigen(const Matrix& s) {
  detail::require(s.rows() == s.cols(), ErrorKind::Dimension, "eigendecomposition needs a square matrix");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(s);
  if (solver.info() != Eigen::Success || !solver.eigenvalues().allFinite())
    detail::fail(ErrorKind::EigFailure, "symmetric eigensolver did not converge");

  const auto n = s.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const Vector& ev = solver.eigenvalues();
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return ev(a) > ev(b); });

  SymmetricEigen out{Vector(n), Matrix(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto src = order[static_cast<std::size_t>(k)];
    out.values(k) = ev(src);
    Vector v = solver.eigenvectors().col(src);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    out.vectors.col(k) = v;
  }
  return out;
}

/// D^{-1/2} A D^{-1/2}. Entry (i,j) is a_ij * (s_i * s_j), which keeps the result exactly symmetric.
inline Matrix normalized_adjacency(const GraphSpec& g) {
  const Vector& deg = g.degree();
  for (Eigen::Index i = 0; i < deg.size(); ++i)
    if (!(deg(i) > 0.0))
      detail::fail(ErrorKind::ZeroDegree, "node " + std::to_string(i) + " has degree " + std::to_string(deg(i)));
  const Vector s = deg.cwiseSqrt().cwiseInverse();
  const Matrix& a = g.adjacency();
  Matrix out(a.rows(), a.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) out(i, j) = a(i, j) * (s(i) * s(j));
  return out;
}

/// Symmetric normalized Laplacian I - D^{-1/2} A D^{-1/2}. Nothing downstream consumes it.
inline Matrix normalized_laplacian(const GraphSpec& g) {
  return Matrix::Identity(g.n(), g.n()) - normalized_adjacency(g);
}

inline StiefelBasis stiefel_basis_from_eigen(const SymmetricEigen& eig, Eigen::Index d) {
  detail::require(d >= 1 && d <= eig.vectors.cols(), ErrorKind::Dimension,
                  "requested d=" + std::to_string(d) + " outside [1, " + std::to_string(eig.vectors.cols()) + "]");
  return StiefelBasis(eig.vectors.leftCols(d));
}

/// Top-d eigenvectors of the normalized adjacency; maximizes Tr(F^T Â F) over St(n, d).
inline StiefelBasis stiefel_basis_by_eig(const GraphSpec& g, Eigen::Index d) {
  detail::require(d >= 1 && d <= g.n(), ErrorKind::Dimension,
                  "requested d=" + std::to_string(d) + " for a graph with n=" + std::to_string(g.n()));
  return stiefel_basis_from_eigen(symmetric_eigen(normalized_adjacency(g)), d);
}

inline double rayleigh_trace(const Matrix& f, const Matrix& s) { return (f.transpose() * s * f).trace(); }

/// S(x) = F^T x
inline Matrix sgft(const StiefelBasis& f, const Matrix& x) {
  detail::require(x.rows() == f.n(), ErrorKind::Dimension,
                  "sgft: signal has " + std::to_string(x.rows()) + " rows, basis has " + std::to_string(f.n()));
  return f.matrix().transpose() * x;
}

/// S^{-1}(z) = F z
inline Matrix isgft(const StiefelBasis& f, const Matrix& z) {
  detail::require(z.rows() == f.d(), ErrorKind::Dimension,
                  "isgft: spectrum has " + std::to_string(z.rows()) + " rows, basis has d=" + std::to_string(f.d()));
  return f.matrix() * z;
}

/// X *_s G = F (F^T X ⊙ F^T G)
inline Matrix sgsc(const StiefelBasis& f, const Matrix& x, const Matrix& g) {
  detail::require(x.rows() == g.rows() && x.cols() == g.cols(), ErrorKind::Dimension,
                  "sgsc: signal " + detail::shape_str(x.rows(), x.cols()) + " vs kernel " +
                      detail::shape_str(g.rows(), g.cols()));
  return isgft(f, sgft(f, x).cwiseProduct(sgft(f, g)));
}

/// Truncated-spectrum graph convolution P diag(θ) P^T x with θ_i = p_i^T g when
/// λ_i >= λ_d and 0 otherwise, applied column by column. Takes the decomposition
/// explicitly so callers can share it with stiefel_basis_from_eigen.
inline Matrix filtered_spectral_oracle(const SymmetricEigen& eig, Eigen::Index d, const Matrix& x, const Matrix& g) {
  const auto n = eig.vectors.rows();
  detail::require(d >= 1 && d <= n, ErrorKind::Dimension, "oracle: d out of range");
  detail::require(x.rows() == n && g.rows() == n && x.cols() == g.cols(), ErrorKind::Dimension,
                  "oracle: shape mismatch");
  const Matrix& p = eig.vectors;
  const double cutoff = eig.values(d - 1);
  Matrix theta = p.transpose() * g;
  for (Eigen::Index i = 0; i < n; ++i)
    if (eig.values(i) < cutoff) theta.row(i).setZero();
  return p * theta.cwiseProduct(p.transpose() * x);
}

inline Matrix filtered_spectral_oracle(const GraphSpec& g_spec, Eigen::Index d, const Matrix& x, const Matrix& g) {
  return filtered_spectral_oracle(symmetric_eigen(normalized_adjacency(g_spec)), d, x, g);
}

}  // namespace dstsgnn
