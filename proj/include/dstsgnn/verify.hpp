#pragma once

// Property suites with independent oracles. Each suite draws random instances
// from a seeded generator, compares the production path against a reference
// computation, and reports the worst residual.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dstsgnn/checkpoint.hpp"
#include "dstsgnn/data.hpp"
#include "dstsgnn/ldgosm.hpp"
#include "dstsgnn/model.hpp"
#include "dstsgnn/msgsc.hpp"
#include "dstsgnn/preprocess.hpp"
#include "dstsgnn/spectral.hpp"

namespace dstsgnn::verify {

using Rng = std::mt19937_64;

struct SuiteResult {
  std::string name;
  bool passed = true;
  double worst = 0.0;      // worst residual observed
  double threshold = 0.0;  // residual bound
  std::int64_t cases = 0;
  double seconds = 0.0;
  std::string detail;
};

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  return Matrix::NullaryExpr(rows, cols, [&]() { return dist(rng); });
}

inline Eigen::Index random_index(Eigen::Index lo, Eigen::Index hi, Rng& rng) {
  return std::uniform_int_distribution<Eigen::Index>(lo, hi)(rng);
}

/// Orthonormal n x d columns from the QR factorization of a Gaussian matrix.
inline Matrix random_orthonormal(Eigen::Index n, Eigen::Index d, Rng& rng) {
  std::normal_distribution<double> dist;
  const Matrix a = Matrix::NullaryExpr(n, d, [&]() { return dist(rng); });
  Eigen::HouseholderQR<Matrix> qr(a);
  return qr.householderQ() * Matrix::Identity(n, d);
}

/// Symmetric nonnegative adjacency with a small random diagonal jitter so the
/// normalized spectrum has no ties.
inline GraphSpec random_graph(Eigen::Index n, Rng& rng, double jitter = 1e-6) {
  Matrix a = random_matrix(n, n, rng, 0.0, 1.0);
  a = (0.5 * (a + a.transpose())).eval();
  a.diagonal() += random_matrix(n, 1, rng, 0.0, jitter);
  return GraphSpec(a);
}

namespace detail {

template <class Body>
SuiteResult timed(std::string name, double threshold, Body&& body) {
  SuiteResult r;
  r.name = std::move(name);
  r.threshold = threshold;
  const auto t0 = std::chrono::steady_clock::now();
  body(r);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.passed = r.passed && r.worst < threshold;
  return r;
}

inline double max_abs(const Matrix& a, const Matrix& b) { return a.size() ? (a - b).cwiseAbs().maxCoeff() : 0.0; }

}  // namespace detail

/// Top-d basis of the normalized adjacency beats random orthonormal bases and
/// attains the sum of the d largest eigenvalues.
inline SuiteResult theorem1_optimality(std::uint64_t seed, int graphs = 50, int bases = 100, Eigen::Index n_max = 32) {
  return detail::timed("theorem1_optimality", 1e-8, [&](SuiteResult& r) {
    Rng rng(seed);
    double worst_violation = 0.0;
    for (int gi = 0; gi < graphs; ++gi) {
      const Eigen::Index n = random_index(2, n_max, rng);
      const Eigen::Index d = random_index(1, n, rng);
      const GraphSpec g = random_graph(n, rng);
      const Matrix a_hat = normalized_adjacency(g);
      const StiefelBasis f = stiefel_basis_by_eig(g, d);
      const double best = rayleigh_trace(f.matrix(), a_hat);

      // Independent route: eigenvalues only, from a fresh solver call.
      Eigen::SelfAdjointEigenSolver<Matrix> oracle(a_hat, Eigen::EigenvaluesOnly);
      const double top = oracle.eigenvalues().tail(d).sum();
      r.worst = std::max(r.worst, std::abs(best - top));
      r.worst = std::max(r.worst, f.orthonormality_defect());

      for (int b = 0; b < bases; ++b) {
        const double other = rayleigh_trace(random_orthonormal(n, d, rng), a_hat);
        worst_violation = std::max(worst_violation, other - best);
      }
      ++r.cases;
    }
    if (worst_violation > 1e-10) {
      r.passed = false;
      r.detail = "random basis exceeded the eigen basis by " + std::to_string(worst_violation);
    }
  });
}

/// sgsc with the eigen basis equals the truncated-spectrum graph convolution.
inline SuiteResult theorem2_equivalence(std::uint64_t seed, int graphs = 200, Eigen::Index n_max = 32) {
  return detail::timed("theorem2_equivalence", 1e-8, [&](SuiteResult& r) {
    Rng rng(seed);
    for (int gi = 0; gi < graphs; ++gi) {
      const Eigen::Index n = random_index(2, n_max, rng);
      const GraphSpec g = random_graph(n, rng);
      const SymmetricEigen eig = symmetric_eigen(normalized_adjacency(g));
      const Matrix x = random_matrix(n, 1, rng), kern = random_matrix(n, 1, rng);
      for (const Eigen::Index d : {Eigen::Index{1}, std::max<Eigen::Index>(1, n / 2), n}) {
        const StiefelBasis f = stiefel_basis_from_eigen(eig, d);
        r.worst = std::max(r.worst, detail::max_abs(sgsc(f, x, kern), filtered_spectral_oracle(eig, d, x, kern)));
        ++r.cases;
      }
    }
  });
}

/// Fast MSGSC equals the literal nested convolution sum. `transform` lets
/// callers check that a corrupted transform is caught.
template <class Transform = StiefelTransform>
SuiteResult theorem3_equivalence(std::uint64_t seed, int instances = 200, Eigen::Index n_max = 16,
                                 Eigen::Index k_max = 8, Eigen::Index m_max = 4, const Transform& transform = {}) {
  return detail::timed("theorem3_equivalence", 1e-9, [&](SuiteResult& r) {
    Rng rng(seed);
    for (int it = 0; it < instances; ++it) {
      const Eigen::Index n = random_index(1, n_max, rng);
      const Eigen::Index d = random_index(1, n, rng);
      const Eigen::Index k = random_index(1, k_max, rng);
      const Eigen::Index m = random_index(1, m_max, rng);
      const StiefelBasis f(random_orthonormal(n, d, rng));
      const Matrix x = random_matrix(n, k, rng);
      std::vector<Matrix> g_list, spectra;
      for (Eigen::Index j = 0; j < m; ++j) {
        g_list.push_back(random_matrix(n, k, rng));
        spectra.push_back(sgft(f, g_list.back()));
      }
      r.worst = std::max(r.worst, detail::max_abs(msgsc_fast(f, x, spectra, transform), msgsc_naive(f, x, g_list)));
      ++r.cases;
    }
  });
}

/// Closed-form LDGOSM solve: constraint, agreement with the generalized eigenproblem
/// H u = λ B u (Cholesky-based solver), and optimality against random feasible W.
inline SuiteResult algorithm1_correctness(std::uint64_t seed, int instances = 200, Eigen::Index n_max = 64,
                                          Eigen::Index d_max = 8, int feasible_samples = 10) {
  return detail::timed("algorithm1_correctness", 1e-7, [&](SuiteResult& r) {
    Rng rng(seed);
    double worst_constraint = 0.0, worst_violation = 0.0;
    for (int it = 0; it < instances; ++it) {
      const Eigen::Index d = random_index(1, d_max, rng);
      const Eigen::Index n = random_index(d, n_max, rng);
      const Matrix x = random_matrix(n, d, rng);
      const auto inp = DynamicGraphInput::from_features(x);
      const double ridge = default_ridge(x);
      const LdgosmResult res = ldgosm_solve(inp, ridge);

      Matrix b = x.transpose() * x;
      b.diagonal().array() += ridge;
      const Matrix c = inp.e().transpose() * x;
      const Matrix h = b + c.transpose() * c;
      worst_constraint =
          std::max(worst_constraint, (res.w.transpose() * b * res.w - Matrix::Identity(d, d)).norm());

      Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> gen(h, b);
      const double oracle = gen.eigenvalues().tail(d).sum();
      r.worst = std::max(r.worst, std::abs(res.objective - oracle) / std::max(1.0, std::abs(oracle)));

      // Random feasible W: whiten a random orthonormal matrix with B^{-1/2}.
      Eigen::SelfAdjointEigenSolver<Matrix> be(b);
      const Matrix m_inv_sqrt = be.operatorInverseSqrt();
      for (int s = 0; s < feasible_samples; ++s) {
        const Matrix w = m_inv_sqrt * random_orthonormal(d, d, rng);
        const double val = ldgosm_objective(inp, w, ridge);
        worst_violation = std::max(worst_violation, (val - res.objective) / std::max(1.0, std::abs(res.objective)));
      }
      ++r.cases;
    }
    std::ostringstream os;
    os << "constraint " << worst_constraint << ", feasible excess " << worst_violation;
    r.detail = os.str();
    if (worst_constraint >= 1e-6 || worst_violation > 1e-9) r.passed = false;
  });
}

/// Small model used by the gradient check.
inline ModelConfig tiny_model_config() {
  ModelConfig c;
  c.t = 16;
  c.horizon = 4;
  c.variables = 3;
  c.p = 4;
  c.s = 4;
  c.k = 8;
  c.d = 8;
  c.m = 2;
  c.decomp_kernel = 3;
  c.epochs = 1;
  c.batch_size = 4;
  return c;
}

/// Relative error with a denominator floor so coordinates whose gradient is
/// numerically zero are judged on absolute error.
inline double gradient_rel_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Every parameter coordinate's analytic gradient against central differences.
/// The basis is frozen at each base point, matching the reverse-pass contract.
inline SuiteResult gradient_check(std::uint64_t seed, int points = 10, double eps = 1e-5, ModelConfig cfg = tiny_model_config()) {
  return detail::timed("gradient_check", 1e-4, [&](SuiteResult& r) {
    Rng rng(seed);
    for (int pt = 0; pt < points; ++pt) {
      cfg.seed = rng();
      ModelParams params = ModelParams::init(cfg);
      // Move away from the zero-bias init so every block is exercised.
      Vector theta = params.to_flat() + 0.1 * Vector(random_matrix(params.size(), 1, rng));
      params.assign_flat(theta);
      const TimeSeriesWindow window{random_matrix(cfg.t, cfg.variables, rng, -2.0, 2.0), 0};
      const Matrix target = random_matrix(cfg.horizon, cfg.variables, rng, -2.0, 2.0);

      const ForwardTrace base = forward_trace(params, cfg, window);
      const FrozenBases frozen{base.comp[0].basis, base.comp[1].basis};
      const Vector analytic = backward_from_trace(params, cfg, base, target).to_flat();

      ModelParams probe = params;
      for (Eigen::Index i = 0; i < theta.size(); ++i) {
        Vector t = theta;
        t(i) = theta(i) + eps;
        probe.assign_flat(t);
        const double up = loss_mae(forward_trace(probe, cfg, window, &frozen).y, target);
        t(i) = theta(i) - eps;
        probe.assign_flat(t);
        const double down = loss_mae(forward_trace(probe, cfg, window, &frozen).y, target);
        const double numeric = (up - down) / (2.0 * eps);
        r.worst = std::max(r.worst, gradient_rel_error(analytic(i), numeric));
        ++r.cases;
      }
    }
  });
}

/// Decomposition additivity, normalization round trip, patch-count formula,
/// split partition, and checkpoint round trip.
inline std::vector<SuiteResult> pipeline_invariants(std::uint64_t seed) {
  std::vector<SuiteResult> out;
  Rng rng(seed);

  out.push_back(detail::timed("decomposition_additivity", 1e-12, [&](SuiteResult& r) {
    for (int it = 0; it < 100; ++it) {
      const Eigen::Index t = random_index(8, 128, rng), n_vars = random_index(1, 6, rng);
      const Eigen::Index p = random_index(2, std::min<Eigen::Index>(t, 32), rng), s = random_index(1, p, rng);
      const TimeSeriesWindow w{random_matrix(t, n_vars, rng, -5.0, 5.0), 0};
      const PatchTensor x = patch(w, p, s);
      const ComponentPair parts = series_decomp(x, default_decomp_kernel(p));
      for (Eigen::Index j = 0; j < x.j(); ++j) {
        const auto ju = static_cast<std::size_t>(j);
        r.worst = std::max(r.worst, detail::max_abs(parts.seasonal.patches[ju] + parts.trend.patches[ju], x.patches[ju]));
      }
      ++r.cases;
    }
  }));

  out.push_back(detail::timed("normalization_roundtrip", 1e-10, [&](SuiteResult& r) {
    for (int it = 0; it < 100; ++it) {
      const Eigen::Index t = random_index(2, 256, rng), n_vars = random_index(1, 8, rng);
      Matrix v = random_matrix(t, n_vars, rng, -3.0, 3.0) * 10.0;
      v.col(0).setConstant(4.5);  // constant column exercises the std floor
      const TimeSeriesWindow w{v, 0};
      const auto [nw, stats] = normalize(w);
      r.worst = std::max(r.worst, detail::max_abs(denormalize(nw.values, stats), v));
      for (Eigen::Index c = 1; c < n_vars; ++c) {
        const double mu = nw.values.col(c).mean();
        const double sigma = std::sqrt((nw.values.col(c).array() - mu).square().mean());
        if (std::abs(mu) >= 1e-10 || std::abs(sigma - 1.0) >= 1e-6) {
          r.passed = false;
          r.detail = "column moments off: mean " + std::to_string(mu) + ", std " + std::to_string(sigma);
        }
      }
      if (nw.values.col(0).cwiseAbs().maxCoeff() != 0.0) {
        r.passed = false;
        r.detail = "constant column did not normalize to zero";
      }
      ++r.cases;
    }
  }));

  out.push_back(detail::timed("patch_count_sweep", 0.5, [&](SuiteResult& r) {
    std::int64_t bad = 0;
    for (Eigen::Index t = 8; t <= 512; ++t)
      for (Eigen::Index p = 2; p <= t; ++p)
        for (Eigen::Index s = 1; s <= p; ++s) {
          const PatchConfig c = PatchConfig::make(t, p, s);
          // The last patch must end past T and use at most s padded rows.
          const Eigen::Index end = s * (c.j - 1) + p;
          if (c.j != (t - p) / s + 2 || end <= t || end > t + s) ++bad;
          ++r.cases;
        }
    // Materialized patches agree with the formula on a sample.
    for (int it = 0; it < 200; ++it) {
      const Eigen::Index t = random_index(8, 512, rng), p = random_index(2, t, rng), s = random_index(1, p, rng);
      const PatchTensor x = patch(TimeSeriesWindow{Matrix::Zero(t, 1), 0}, p, s);
      if (x.j() != (t - p) / s + 2 || x.p() != p) ++bad;
    }
    r.worst = static_cast<double>(bad);
  }));

  out.push_back(detail::timed("split_partition", 0.5, [&](SuiteResult& r) {
    std::int64_t bad = 0;
    for (int it = 0; it < 200; ++it) {
      const Eigen::Index rows = random_index(1, 10000, rng);
      Dataset ds{"synthetic", Matrix(rows, 2), {}};
      ds.values.col(0) = Vector::LinSpaced(rows, 0.0, static_cast<double>(rows - 1));
      ds.values.col(1).setRandom();
      const DataSplits sp = chronological_split(ds, SplitSpec{});
      Matrix joined(rows, 2);
      joined << sp.train, sp.val, sp.test;
      if (joined != ds.values) ++bad;
      if (sp.train.rows() != static_cast<Eigen::Index>(std::floor(0.7 * static_cast<double>(rows) + 1e-9))) ++bad;
      if (sp.val_begin != sp.train.rows() || sp.test_begin != sp.train.rows() + sp.val.rows()) ++bad;
      ++r.cases;
    }
    r.worst = static_cast<double>(bad);
  }));

  out.push_back(detail::timed("checkpoint_roundtrip", 0.5, [&](SuiteResult& r) {
    std::int64_t bad = 0;
    for (int it = 0; it < 5; ++it) {
      ModelConfig cfg = tiny_model_config();
      cfg.seed = rng();
      Checkpoint ck{cfg, ModelParams::init(cfg), Standardizer{Vector::Random(cfg.variables), Vector::Ones(cfg.variables)}};
      const std::string bytes = encode_checkpoint(ck);
      const Checkpoint back = decode_checkpoint(bytes);
      if (encode_checkpoint(back) != bytes || !(back.config == cfg)) ++bad;
      if (back.params.to_flat() != ck.params.to_flat()) ++bad;
      const TimeSeriesWindow w{random_matrix(cfg.t, cfg.variables, rng), 0};
      if (forward(back.params, cfg, w).y != forward(ck.params, cfg, w).y) ++bad;
      ++r.cases;
    }
    r.worst = static_cast<double>(bad);
  }));
  return out;
}

/// Inverse transform with a flipped sign; msgsc suites must catch it.
struct SignFlippedTransform {
  Matrix forward(const StiefelBasis& f, const Matrix& x) const { return sgft(f, x); }
  Matrix inverse(const StiefelBasis& f, const Matrix& z) const { return -isgft(f, z); }
};

struct VerifyOptions {
  std::uint64_t seed = 7;
  double scale = 1.0;  // multiplies instance counts
  bool inject_isgft_sign_flip = false;
};

inline std::vector<SuiteResult> run_all(const VerifyOptions& o) {
  auto count = [&](int base) { return std::max(1, static_cast<int>(std::lround(base * o.scale))); };
  std::vector<SuiteResult> out;
  out.push_back(theorem1_optimality(o.seed + 1, count(50), 100));
  out.push_back(theorem2_equivalence(o.seed + 2, count(200)));
  if (o.inject_isgft_sign_flip)
    out.push_back(theorem3_equivalence(o.seed + 3, count(200), 16, 8, 4, SignFlippedTransform{}));
  else
    out.push_back(theorem3_equivalence(o.seed + 3, count(200)));
  out.push_back(algorithm1_correctness(o.seed + 4, count(200)));
  out.push_back(gradient_check(o.seed + 5, count(10)));
  for (auto& r : pipeline_invariants(o.seed + 6)) out.push_back(std::move(r));
  return out;
}

}  // namespace dstsgnn::verify
