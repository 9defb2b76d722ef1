#pragma once

// Multi-layer Stiefel graph spectral convolution.
//
//   MSGSC(X, G) = sum_{i=1..m} X *_s G_1 *_s ... *_s G_i
//               = S^{-1}( sum_i S(X) ⊙ prod_{j<=i} S(G_j) )
//
// The second form needs one forward and one inverse transform for any m.

#include <Eigen/Dense>

#include <random>
#include <vector>

#include "dstsgnn/errors.hpp"
#include "dstsgnn/spectral.hpp"

namespace dstsgnn {

/// Per-layer node-domain kernel weights W_j (n x K); spectra are F^T W_j.
struct KernelStack {
  std::vector<Matrix> layer_weights;

  Eigen::Index m() const noexcept { return static_cast<Eigen::Index>(layer_weights.size()); }

  void validate() const {
    detail::require(!layer_weights.empty(), ErrorKind::Config, "kernel stack needs at least one layer");
    for (const Matrix& w : layer_weights)
      detail::require(w.rows() == layer_weights.front().rows() && w.cols() == layer_weights.front().cols(),
                      ErrorKind::Dimension, "kernel layers must share shape");
  }

  /// Uniform in [-1/sqrt(n), 1/sqrt(n)].
  template <class Rng>
  static KernelStack random(Eigen::Index m, Eigen::Index n, Eigen::Index k, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(n));
    std::uniform_real_distribution<double> dist(-bound, bound);
    KernelStack out;
    for (Eigen::Index l = 0; l < m; ++l)
      out.layer_weights.push_back(Matrix::NullaryExpr(n, k, [&]() { return dist(rng); }));
    return out;
  }
};

/// The SGFT / ISGFT pair used by msgsc_fast. Swappable so callers can count or perturb transforms.
struct StiefelTransform {
  Matrix forward(const StiefelBasis& f, const Matrix& x) const { return sgft(f, x); }
  Matrix inverse(const StiefelBasis& f, const Matrix& z) const { return isgft(f, z); }
};

/// Ĝ_j = F^T W_j
inline std::vector<Matrix> spectral_kernels(const StiefelBasis& f, const KernelStack& stack) {
  stack.validate();
  std::vector<Matrix> out;
  out.reserve(stack.layer_weights.size());
  for (const Matrix& w : stack.layer_weights) out.push_back(sgft(f, w));
  return out;
}

template <class Transform = StiefelTransform>
Matrix msgsc_fast(const StiefelBasis& f, const Matrix& x, const std::vector<Matrix>& kernels,
                  const Transform& transform = {}) {
  detail::require(!kernels.empty(), ErrorKind::Config, "msgsc needs at least one kernel");
  detail::require(x.rows() == f.n(), ErrorKind::Dimension, "msgsc: features do not match basis");
  const Matrix z = transform.forward(f, x);
  for (const Matrix& g : kernels)
    detail::require(g.rows() == z.rows() && g.cols() == z.cols(), ErrorKind::Dimension,
                    "msgsc: kernel " + detail::shape_str(g.rows(), g.cols()) + " vs spectrum " +
                        detail::shape_str(z.rows(), z.cols()));

  Matrix running = kernels.front();
  Matrix acc = running;
  for (std::size_t i = 1; i < kernels.size(); ++i) {
    running = running.cwiseProduct(kernels[i]);
    acc += running;
  }
  return transform.inverse(f, z.cwiseProduct(acc));
}

/// Literal left-associated nested convolutions, summed over depth. Reference only.
inline Matrix msgsc_naive(const StiefelBasis& f, const Matrix& x, const std::vector<Matrix>& g_list) {
  detail::require(!g_list.empty(), ErrorKind::Config, "msgsc needs at least one kernel");
  Matrix out = Matrix::Zero(x.rows(), x.cols());
  for (std::size_t i = 0; i < g_list.size(); ++i) {
    Matrix term = x;
    for (std::size_t j = 0; j <= i; ++j) term = sgsc(f, term, g_list[j]);
    out += term;
  }
  return out;
}

}  // namespace dstsgnn
