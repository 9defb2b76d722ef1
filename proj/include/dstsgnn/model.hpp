#pragma once

// End-to-end forecaster:
//
//   normalize -> patch -> series_decomp
//     -> per component: assemble -> embed -> LDGOSM basis -> msgsc_fast
//     -> per-variable concat of both components -> shared affine head -> denormalize
//
// The Stiefel basis is recomputed from the embedded features on every forward
// pass and treated as a constant in the reverse pass.

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dstsgnn/errors.hpp"
#include "dstsgnn/ldgosm.hpp"
#include "dstsgnn/msgsc.hpp"
#include "dstsgnn/preprocess.hpp"
#include "dstsgnn/spectral.hpp"

namespace dstsgnn {

struct ModelConfig {
  std::int64_t t = 96;              // input window length
  std::int64_t horizon = 96;        // tau
  std::int64_t variables = 8;       // N
  std::int64_t p = 8;               // patch length
  std::int64_t s = 4;               // stride
  std::int64_t k = 128;             // hidden width
  std::int64_t d = 128;             // SGFT dimension, d <= k and d <= J*N
  std::int64_t m = 2;               // MSGSC layers
  std::int64_t decomp_kernel = 0;   // 0 selects default_decomp_kernel(p)
  double ridge = 1e-6;              // relative: ridge = ridge * Tr(X^T X) / K
  double learning_rate = 1e-4;
  std::int64_t epochs = 10;
  std::int64_t batch_size = 32;
  std::int64_t patience = 5;
  std::uint64_t seed = 2025;

  // Keeps LDGOSM well-defined when a component's embedding is identically zero.
  static constexpr double kRidgeFloor = 1e-12;

  Eigen::Index patch_count() const { return (t - p) / s + 2; }
  Eigen::Index nodes() const { return patch_count() * variables; }
  Eigen::Index kernel_width() const { return decomp_kernel > 0 ? decomp_kernel : default_decomp_kernel(p); }
  Eigen::Index head_inputs() const { return 2 * patch_count() * k; }

  void validate() const {
    auto positive = [](std::int64_t v, const char* name) {
      detail::require(v >= 1, ErrorKind::Config, std::string(name) + " must be >= 1");
    };
    positive(t, "t");
    positive(horizon, "horizon");
    positive(variables, "variables");
    positive(k, "k");
    positive(d, "d");
    positive(m, "m");
    positive(epochs, "epochs");
    positive(batch_size, "batch_size");
    positive(patience, "patience");
    PatchConfig::make(t, p, s);
    const auto kw = kernel_width();
    detail::require(kw % 2 == 1 && kw <= p, ErrorKind::Config,
                    "decomp_kernel must be odd and <= p, got " + std::to_string(kw));
    detail::require(d <= k, ErrorKind::Config, "d must not exceed k");
    detail::require(d <= nodes(), ErrorKind::Config,
                    "d=" + std::to_string(d) + " exceeds node count J*N=" + std::to_string(nodes()));
    detail::require(ridge >= 0.0 && std::isfinite(ridge), ErrorKind::Config, "ridge must be finite and >= 0");
    detail::require(learning_rate >= 0.0 && std::isfinite(learning_rate), ErrorKind::Config,
                    "learning_rate must be finite and >= 0");
  }

  nlohmann::json to_json() const {
    return {{"t", t},       {"horizon", horizon},
            {"variables", variables},
            {"p", p},       {"s", s},
            {"k", k},       {"d", d},
            {"m", m},       {"decomp_kernel", decomp_kernel},
            {"ridge", ridge},
            {"learning_rate", learning_rate},
            {"epochs", epochs},
            {"batch_size", batch_size},
            {"patience", patience},
            {"seed", seed}};
  }

  /// Overlays keys from j onto *this. Unknown keys are rejected.
  void merge_json(const nlohmann::json& j) {
    detail::require(j.is_object(), ErrorKind::Config, "model config must be a JSON object");
    for (const auto& [key, v] : j.items()) {
      try {
        if (key == "t") t = v.get<std::int64_t>();
        else if (key == "horizon") horizon = v.get<std::int64_t>();
        else if (key == "variables") variables = v.get<std::int64_t>();
        else if (key == "p") p = v.get<std::int64_t>();
        else if (key == "s") s = v.get<std::int64_t>();
        else if (key == "k") k = v.get<std::int64_t>();
        else if (key == "d") d = v.get<std::int64_t>();
        else if (key == "m") m = v.get<std::int64_t>();
        else if (key == "decomp_kernel") decomp_kernel = v.get<std::int64_t>();
        else if (key == "ridge") ridge = v.get<double>();
        else if (key == "learning_rate") learning_rate = v.get<double>();
        else if (key == "epochs") epochs = v.get<std::int64_t>();
        else if (key == "batch_size") batch_size = v.get<std::int64_t>();
        else if (key == "patience") patience = v.get<std::int64_t>();
        else if (key == "seed") seed = v.get<std::uint64_t>();
        else detail::fail(ErrorKind::Config, "unknown model config key '" + key + "'");
      } catch (const nlohmann::json::exception& e) {
        detail::fail(ErrorKind::Config, "model config key '" + key + "': " + e.what());
      }
    }
  }

  bool operator==(const ModelConfig&) const = default;
};

struct ComponentParams {
  Matrix embed_w;  // p x K
  Vector embed_b;  // K
  KernelStack kernels;  // m layers of n x K
};

struct ModelParams {
  std::array<ComponentParams, 2> comp;  // indexed by Component
  Matrix head_w;  // 2*J*K x tau
  Vector head_b;  // tau

  /// Uniform +-1/sqrt(fan_in) weights, zero biases, kernels +-1/sqrt(n).
  static ModelParams init(const ModelConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    auto uniform = [&](Eigen::Index rows, Eigen::Index cols, double bound) {
      std::uniform_real_distribution<double> dist(-bound, bound);
      return Matrix(Matrix::NullaryExpr(rows, cols, [&]() { return dist(rng); }));
    };
    ModelParams out;
    for (auto& c : out.comp) {
      c.embed_w = uniform(cfg.p, cfg.k, 1.0 / std::sqrt(static_cast<double>(cfg.p)));
      c.embed_b = Vector::Zero(cfg.k);
      c.kernels = KernelStack::random(cfg.m, cfg.nodes(), cfg.k, rng);
    }
    out.head_w = uniform(cfg.head_inputs(), cfg.horizon, 1.0 / std::sqrt(static_cast<double>(cfg.head_inputs())));
    out.head_b = Vector::Zero(cfg.horizon);
    return out;
  }

  static ModelParams zeros_like(const ModelParams& other) {
    ModelParams z = other;
    z.for_each_block([](Eigen::Ref<Matrix> b) { b.setZero(); });
    return z;
  }

  /// Visits every parameter block in the stable flat order: seasonal then
  /// trend {embed_w, embed_b, kernel_1..kernel_m}, then head_w, head_b.
  /// Vectors are visited as n x 1 blocks.
  template <class Fn>
  void for_each_block(Fn&& fn) {
    visit(*this, [&](auto& b) { fn(Eigen::Ref<Matrix>(b)); });
  }

  template <class Fn>
  void for_each_block(Fn&& fn) const {
    visit(*this, [&](const auto& b) { fn(Eigen::Ref<const Matrix>(b)); });
  }

  Eigen::Index size() const {
    Eigen::Index total = 0;
    for_each_block([&](const Eigen::Ref<const Matrix>& b) { total += b.size(); });
    return total;
  }

  Vector to_flat() const {
    Vector out(size());
    Eigen::Index at = 0;
    for_each_block([&](const Eigen::Ref<const Matrix>& b) {
      out.segment(at, b.size()) = b.reshaped();
      at += b.size();
    });
    return out;
  }

  void assign_flat(const Vector& flat) {
    detail::require(flat.size() == size(), ErrorKind::Dimension,
                    "flat vector has " + std::to_string(flat.size()) + " entries, model has " + std::to_string(size()));
    Eigen::Index at = 0;
    for_each_block([&](Eigen::Ref<Matrix> b) {
      b.reshaped() = flat.segment(at, b.size());
      at += b.size();
    });
  }

  ModelParams& operator+=(const ModelParams& o) {
    assign_flat(to_flat() + o.to_flat());
    return *this;
  }

 private:
  template <class Self, class Fn>
  static void visit(Self& self, Fn&& fn) {
    for (auto& c : self.comp) {
      fn(c.embed_w);
      fn(c.embed_b);
      for (auto& w : c.kernels.layer_weights) fn(w);
    }
    fn(self.head_w);
    fn(self.head_b);
  }
};

inline Eigen::Index count_params(const ModelParams& p) { return p.size(); }

struct ForecastOutput {
  Matrix y;  // tau x N in input units
};

/// Intermediate values of one component's path, kept for the reverse pass.
struct ComponentTrace {
  Matrix raw;                   // n x p
  Matrix x;                     // n x K embedded
  Matrix basis;                 // n x d
  std::vector<Matrix> spectra;  // Ĝ_j, d x K
  std::vector<Matrix> running;  // prod_{j<=i} Ĝ_j
  Matrix z;                     // F^T X
  Matrix q;                     // sum_i running_i
  Matrix y;                     // n x K
};

struct ForwardTrace {
  NormStats stats;
  std::array<ComponentTrace, 2> comp;
  Matrix features;  // 2*J*K x N, column v is variable v's concatenated features
  Matrix out_norm;  // tau x N before denormalization
  Matrix y;         // tau x N
};

/// Per-component bases to reuse instead of recomputing; used by finite-difference checks.
using FrozenBases = std::array<Matrix, 2>;

/// LDGOSM basis for embedded features X with E = ReLU(X).
inline Matrix component_basis(const Matrix& x, const ModelConfig& cfg) {
  const auto inp = DynamicGraphInput::from_features(x);
  return ldgosm_solve(inp, default_ridge(x, cfg.ridge, ModelConfig::kRidgeFloor), cfg.d).f;
}

inline ForwardTrace forward_trace(const ModelParams& params, const ModelConfig& cfg, const TimeSeriesWindow& window,
                                  const FrozenBases* frozen = nullptr) {
  detail::require(window.length() == cfg.t && window.variables() == cfg.variables, ErrorKind::Config,
                  "window is " + detail::shape_str(window.length(), window.variables()) + ", model expects " +
                      detail::shape_str(cfg.t, cfg.variables));
  const Eigen::Index n_vars = cfg.variables, j_count = cfg.patch_count(), k = cfg.k;

  ForwardTrace tr;
  auto [norm_window, stats] = normalize(window);
  tr.stats = std::move(stats);
  const ComponentPair parts = series_decomp(patch(norm_window, cfg.p, cfg.s), cfg.kernel_width());

  tr.features.resize(cfg.head_inputs(), n_vars);
  for (std::size_t c = 0; c < 2; ++c) {
    const ComponentParams& cp = params.comp[c];
    ComponentTrace& ct = tr.comp[c];
    ct.raw = assemble_hyperpatch(c == 0 ? parts.seasonal : parts.trend);
    ct.x = embed(ct.raw, cp.embed_w, cp.embed_b);
    ct.basis = frozen ? (*frozen)[c] : component_basis(ct.x, cfg);
    const auto f = StiefelBasis::trusted(ct.basis);

    ct.spectra = spectral_kernels(f, cp.kernels);
    ct.z = sgft(f, ct.x);
    ct.running.clear();
    ct.running.push_back(ct.spectra.front());
    for (std::size_t i = 1; i < ct.spectra.size(); ++i) ct.running.push_back(ct.running.back().cwiseProduct(ct.spectra[i]));
    ct.q = ct.running.front();
    for (std::size_t i = 1; i < ct.running.size(); ++i) ct.q += ct.running[i];
    ct.y = isgft(f, ct.z.cwiseProduct(ct.q));

    const Eigen::Index offset = static_cast<Eigen::Index>(c) * j_count * k;
    for (Eigen::Index j = 0; j < j_count; ++j)
      for (Eigen::Index v = 0; v < n_vars; ++v)
        tr.features.col(v).segment(offset + j * k, k) = ct.y.row(j * n_vars + v).transpose();
  }

  tr.out_norm = params.head_w.transpose() * tr.features;  // tau x N
  tr.out_norm.colwise() += params.head_b;
  tr.y = denormalize(tr.out_norm, tr.stats);
  if (!tr.y.allFinite()) detail::fail(ErrorKind::EigFailure, "forward produced non-finite output");
  return tr;
}

inline ForecastOutput forward(const ModelParams& params, const ModelConfig& cfg, const TimeSeriesWindow& window) {
  return {forward_trace(params, cfg, window).y};
}

/// Mean absolute error.
inline double loss_mae(const Matrix& pred, const Matrix& target) {
  detail::require(pred.rows() == target.rows() && pred.cols() == target.cols() && pred.size() > 0,
                  ErrorKind::Dimension, "loss: shape mismatch");
  return (pred - target).cwiseAbs().mean();
}

inline double sign0(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

struct LossGrad {
  double loss = 0.0;
  ModelParams grad;
};

/// Reverse pass of the MAE loss through a recorded forward trace. The basis in
/// the trace is a constant; sign(0) is taken as 0.
inline ModelParams backward_from_trace(const ModelParams& params, const ModelConfig& cfg, const ForwardTrace& tr,
                                       const Matrix& target) {
  const Eigen::Index n_vars = cfg.variables, j_count = cfg.patch_count(), k = cfg.k;
  ModelParams g = ModelParams::zeros_like(params);

  const double scale = 1.0 / static_cast<double>(tr.y.size());
  Matrix d_out = (tr.y - target).unaryExpr([](double v) { return sign0(v); }) * scale;
  d_out = d_out * tr.stats.std.asDiagonal();  // through denormalize

  g.head_w = tr.features * d_out.transpose();
  g.head_b = d_out.rowwise().sum();
  const Matrix d_features = params.head_w * d_out;  // 2JK x N

  for (std::size_t c = 0; c < 2; ++c) {
    const ComponentTrace& ct = tr.comp[c];
    ComponentParams& gc = g.comp[c];

    Matrix d_y(ct.y.rows(), k);
    const Eigen::Index offset = static_cast<Eigen::Index>(c) * j_count * k;
    for (Eigen::Index j = 0; j < j_count; ++j)
      for (Eigen::Index v = 0; v < n_vars; ++v)
        d_y.row(j * n_vars + v) = d_features.col(v).segment(offset + j * k, k).transpose();

    const Matrix d_s = ct.basis.transpose() * d_y;  // d x K
    const Matrix d_z = d_s.cwiseProduct(ct.q);
    const Matrix d_q = d_s.cwiseProduct(ct.z);

    // running_i = running_{i-1} ⊙ Ĝ_i and q = sum_i running_i
    const std::size_t m = ct.spectra.size();
    Matrix carry = Matrix::Zero(d_q.rows(), d_q.cols());
    for (std::size_t i = m; i-- > 0;) {
      const Matrix d_running = d_q + (i + 1 < m ? carry.cwiseProduct(ct.spectra[i + 1]) : carry);
      const Matrix d_spectrum = i == 0 ? d_running : d_running.cwiseProduct(ct.running[i - 1]);
      gc.kernels.layer_weights[i] = ct.basis * d_spectrum;
      carry = d_running;
    }

    const Matrix d_x = ct.basis * d_z;
    gc.embed_w = ct.raw.transpose() * d_x;
    gc.embed_b = d_x.colwise().sum().transpose();
  }
  return g;
}

inline LossGrad loss_and_gradient(const ModelParams& params, const ModelConfig& cfg, const TimeSeriesWindow& window,
                                  const Matrix& target, const FrozenBases* frozen = nullptr) {
  const ForwardTrace tr = forward_trace(params, cfg, window, frozen);
  return {loss_mae(tr.y, target), backward_from_trace(params, cfg, tr, target)};
}

/// Flat gradient of the MAE loss for one (window, target) pair.
inline Vector backward(const ModelParams& params, const ModelConfig& cfg, const TimeSeriesWindow& window,
                       const Matrix& target) {
  return loss_and_gradient(params, cfg, window, target).grad.to_flat();
}

}  // namespace dstsgnn
