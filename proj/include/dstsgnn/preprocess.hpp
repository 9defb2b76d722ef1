#pragma once

// Window-to-graph pipeline: instance normalization, patching with tail padding,
// moving-average series decomposition, hyperpatch node layout, and embedding.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "dstsgnn/errors.hpp"
#include "dstsgnn/spectral.hpp"

namespace dstsgnn {

struct TimeSeriesWindow {
  Matrix values;            // T x N
  std::int64_t t_index = 0;  // row of the window start in its source series

  Eigen::Index length() const noexcept { return values.rows(); }
  Eigen::Index variables() const noexcept { return values.cols(); }
};

struct PatchConfig {
  Eigen::Index p = 0;  // patch length
  Eigen::Index s = 0;  // stride
  Eigen::Index j = 0;  // patch count

  /// J = floor((T - p) / s) + 2
  static PatchConfig make(Eigen::Index t, Eigen::Index p, Eigen::Index s) {
    detail::require(p >= 1 && p <= t, ErrorKind::Config,
                    "patch length " + std::to_string(p) + " must be in [1, T=" + std::to_string(t) + "]");
    detail::require(s >= 1 && s <= p, ErrorKind::Config,
                    "stride " + std::to_string(s) + " must be in [1, p=" + std::to_string(p) + "]");
    return {p, s, (t - p) / s + 2};
  }
};

/// J patches, each p x N.
struct PatchTensor {
  std::vector<Matrix> patches;

  Eigen::Index j() const noexcept { return static_cast<Eigen::Index>(patches.size()); }
  Eigen::Index p() const noexcept { return patches.empty() ? 0 : patches.front().rows(); }
  Eigen::Index variables() const noexcept { return patches.empty() ? 0 : patches.front().cols(); }
};

enum class Component : std::uint8_t { Seasonal = 0, Trend = 1 };

struct ComponentPair {
  PatchTensor seasonal;
  PatchTensor trend;
};

struct NormStats {
  static constexpr double kStdFloor = 1e-5;
  Vector mean;  // length N
  Vector std;   // length N, >= kStdFloor
};

/// Embedded hyperpatch graph for one component. Rows are patch-major: row j*N + v.
struct HyperpatchBatch {
  Matrix nodes;  // (J*N) x K
  Component component = Component::Seasonal;
  NormStats stats;
  PatchConfig config;
};

/// Per-variable zero mean / unit variance over the window (population variance).
inline std::pair<TimeSeriesWindow, NormStats> normalize(const TimeSeriesWindow& w) {
  detail::require(w.values.rows() >= 1 && w.values.allFinite(), ErrorKind::Data,
                  "window must be non-empty and finite");
  NormStats stats;
  stats.mean = w.values.colwise().mean().transpose();
  const Matrix centered = w.values.rowwise() - stats.mean.transpose();
  stats.std = (centered.colwise().squaredNorm().transpose() / static_cast<double>(w.values.rows()))
                  .cwiseSqrt()
                  .cwiseMax(NormStats::kStdFloor);
  TimeSeriesWindow out{centered * stats.std.cwiseInverse().asDiagonal(), w.t_index};
  return {std::move(out), std::move(stats)};
}

/// y * std + mean, per variable.
inline Matrix denormalize(const Matrix& y, const NormStats& stats) {
  detail::require(y.cols() == stats.mean.size() && y.cols() == stats.std.size(), ErrorKind::Dimension,
                  "denormalize: " + std::to_string(y.cols()) + " columns vs " +
                      std::to_string(stats.mean.size()) + " statistics");
  return (y * stats.std.asDiagonal()).rowwise() + stats.mean.transpose();
}

/// Splits the window into J overlapping patches. The series is first extended
/// by appending a copy of its final s rows so the last patch is complete.
inline PatchTensor patch(const TimeSeriesWindow& w, Eigen::Index p, Eigen::Index s) {
  const Eigen::Index t = w.length();
  const PatchConfig cfg = PatchConfig::make(t, p, s);
  Matrix padded(t + s, w.variables());
  padded.topRows(t) = w.values;
  padded.bottomRows(s) = w.values.bottomRows(s);

  PatchTensor out;
  out.patches.reserve(static_cast<std::size_t>(cfg.j));
  for (Eigen::Index j = 0; j < cfg.j; ++j) out.patches.emplace_back(padded.middleRows(j * s, p));
  return out;
}

/// Default moving-average width: 25, clipped to the largest odd value <= p.
inline Eigen::Index default_decomp_kernel(Eigen::Index p) {
  Eigen::Index k = std::min<Eigen::Index>(25, p);
  if (k % 2 == 0) --k;
  return std::max<Eigen::Index>(k, 1);
}

/// Centered moving average along each patch's time axis with edge replication
/// gives the trend; the seasonal part is the residual.
inline ComponentPair series_decomp(const PatchTensor& x, Eigen::Index kernel) {
  const Eigen::Index p = x.p();
  detail::require(kernel >= 1 && kernel % 2 == 1, ErrorKind::Config,
                  "decomposition kernel must be odd, got " + std::to_string(kernel));
  detail::require(kernel <= p, ErrorKind::Config,
                  "decomposition kernel " + std::to_string(kernel) + " exceeds patch length " + std::to_string(p));
  const Eigen::Index half = (kernel - 1) / 2;

  ComponentPair out;
  out.seasonal.patches.reserve(x.patches.size());
  out.trend.patches.reserve(x.patches.size());
  for (const Matrix& patch_values : x.patches) {
    Matrix trend(p, patch_values.cols());
    for (Eigen::Index r = 0; r < p; ++r) {
      trend.row(r).setZero();
      for (Eigen::Index o = -half; o <= half; ++o) {
        const Eigen::Index src = std::clamp<Eigen::Index>(r + o, 0, p - 1);
        trend.row(r) += patch_values.row(src);
      }
      trend.row(r) /= static_cast<double>(kernel);
    }
    out.seasonal.patches.push_back(patch_values - trend);
    out.trend.patches.push_back(std::move(trend));
  }
  return out;
}

/// Row j*N + v holds patch j of variable v (length p).
inline Matrix assemble_hyperpatch(const PatchTensor& c) {
  const Eigen::Index j_count = c.j(), n_vars = c.variables(), p = c.p();
  Matrix raw(j_count * n_vars, p);
  for (Eigen::Index j = 0; j < j_count; ++j)
    raw.middleRows(j * n_vars, n_vars) = c.patches[static_cast<std::size_t>(j)].transpose();
  return raw;
}

/// Inverse of assemble_hyperpatch.
inline PatchTensor disassemble_hyperpatch(const Matrix& raw, Eigen::Index n_vars) {
  detail::require(n_vars >= 1 && raw.rows() % n_vars == 0, ErrorKind::Dimension,
                  "node count " + std::to_string(raw.rows()) + " is not a multiple of N=" + std::to_string(n_vars));
  PatchTensor out;
  for (Eigen::Index j = 0; j < raw.rows() / n_vars; ++j)
    out.patches.emplace_back(raw.middleRows(j * n_vars, n_vars).transpose());
  return out;
}

/// raw * weights + bias (bias broadcast over rows).
inline Matrix embed(const Matrix& raw, const Matrix& weights, const Vector& bias) {
  detail::require(raw.cols() == weights.rows() && weights.cols() == bias.size(), ErrorKind::Dimension,
                  "embed: raw " + detail::shape_str(raw.rows(), raw.cols()) + ", weights " +
                      detail::shape_str(weights.rows(), weights.cols()) + ", bias " + std::to_string(bias.size()));
  Matrix out = raw * weights;
  out.rowwise() += bias.transpose();
  return out;
}

}  // namespace dstsgnn
