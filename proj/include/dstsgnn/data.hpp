#pragma once

// Dataset ingestion, chronological splitting, sliding windows, and metrics.

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dstsgnn/errors.hpp"
#include "dstsgnn/preprocess.hpp"
#include "dstsgnn/spectral.hpp"

namespace dstsgnn {

/// Expected shape of a CSV dataset; rows = 0 accepts any row count.
/// `skip_columns` drops leading non-feature columns such as a date stamp;
/// `header` forces header handling when set, otherwise the first line is a
/// header iff one of its feature cells is non-numeric.
struct DatasetManifest {
  std::string name;
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::int64_t skip_columns = 0;
  std::optional<bool> header;

  static DatasetManifest from_json(const nlohmann::json& j) {
    detail::require(j.is_object(), ErrorKind::Config, "manifest must be a JSON object");
    DatasetManifest m;
    for (const auto& [key, value] : j.items()) {
      if (key == "name") m.name = value.get<std::string>();
      else if (key == "rows") m.rows = value.get<std::int64_t>();
      else if (key == "cols") m.cols = value.get<std::int64_t>();
      else if (key == "skip_columns") m.skip_columns = value.get<std::int64_t>();
      else if (key == "header") m.header = value.get<bool>();
      else detail::fail(ErrorKind::Config, "unknown manifest key '" + key + "'");
    }
    detail::require(m.rows > 0 && m.cols > 0 && m.skip_columns >= 0, ErrorKind::Config,
                    "manifest needs positive rows/cols and nonnegative skip_columns");
    return m;
  }

  nlohmann::json to_json() const {
    nlohmann::json j{{"name", name}, {"rows", rows}, {"cols", cols}};
    if (skip_columns) j["skip_columns"] = skip_columns;
    if (header) j["header"] = *header;
    return j;
  }
};

struct Dataset {
  std::string name;
  Matrix values;  // timesteps x features
  std::vector<std::string> feature_names;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
    s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

inline std::optional<double> parse_number(std::string_view cell) {
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc{} || ptr != cell.data() + cell.size() || cell.empty()) return std::nullopt;
  return v;
}

}  // namespace detail

inline Dataset parse_csv(std::istream& in, const DatasetManifest& manifest, const std::string& source = "<stream>") {
  Dataset ds;
  ds.name = manifest.name;
  std::vector<double> flat;
  std::string line;
  std::int64_t line_no = 0, width = -1, rows = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    detail::require(static_cast<std::int64_t>(cells.size()) > manifest.skip_columns, ErrorKind::Shape,
                    source + ":" + std::to_string(line_no) + ": fewer columns than skip_columns");
    const auto feature_cells = std::span(cells).subspan(static_cast<std::size_t>(manifest.skip_columns));

    if (first) {
      first = false;
      bool is_header = false;
      if (manifest.header) {
        is_header = *manifest.header;
      } else {
        for (const auto c : feature_cells) is_header = is_header || !detail::parse_number(c).has_value();
      }
      if (is_header) {
        for (const auto c : feature_cells) ds.feature_names.emplace_back(c);
        width = static_cast<std::int64_t>(feature_cells.size());
        continue;
      }
    }
    if (width < 0) width = static_cast<std::int64_t>(feature_cells.size());
    if (static_cast<std::int64_t>(feature_cells.size()) != width)
      detail::fail(ErrorKind::Shape, source + ":" + std::to_string(line_no) + ": expected " + std::to_string(width) +
                                         " feature columns, found " + std::to_string(feature_cells.size()));
    for (std::size_t c = 0; c < feature_cells.size(); ++c) {
      const auto v = detail::parse_number(feature_cells[c]);
      if (!v || !std::isfinite(*v))
        detail::fail(ErrorKind::Parse, source + ": row " + std::to_string(line_no) + ", column " +
                                           std::to_string(c + 1 + static_cast<std::size_t>(manifest.skip_columns)) +
                                           ": cannot parse '" + std::string(feature_cells[c]) + "' as a finite number");
      flat.push_back(*v);
    }
    ++rows;
  }
  if (width != manifest.cols)
    detail::fail(ErrorKind::Shape, source + ": manifest expects " + std::to_string(manifest.cols) +
                                       " feature columns, file has " + std::to_string(std::max<std::int64_t>(width, 0)));
  if (manifest.rows > 0 && rows != manifest.rows)
    detail::fail(ErrorKind::Shape, source + ": manifest expects " + std::to_string(manifest.rows) +
                                       " rows, file has " + std::to_string(rows));
  ds.values = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      flat.data(), rows, width);
  return ds;
}

inline Dataset load_csv(const std::string& path, const DatasetManifest& manifest) {
  std::ifstream in(path);
  if (!in) detail::fail(ErrorKind::Io, "cannot open dataset '" + path + "'");
  return parse_csv(in, manifest, path);
}

struct SplitSpec {
  double train_frac = 0.7;
  double val_frac = 0.1;
  double test_frac = 0.2;

  void validate() const {
    detail::require(train_frac >= 0 && val_frac >= 0 && test_frac >= 0, ErrorKind::Config,
                    "split fractions must be nonnegative");
    detail::require(std::abs(train_frac + val_frac + test_frac - 1.0) < 1e-9, ErrorKind::Config,
                    "split fractions must sum to 1");
  }
};

struct DataSplits {
  Matrix train, val, test;
  Eigen::Index train_begin = 0, val_begin = 0, test_begin = 0;  // row offsets in the source
};

/// Contiguous ranges of floor(frac * rows) for train and val; the remainder goes to test.
inline DataSplits chronological_split(const Dataset& ds, const SplitSpec& spec) {
  spec.validate();
  const auto rows = ds.values.rows();
  // The epsilon absorbs representation error such as 0.7 * 10 = 6.9999...
  const auto n_train = static_cast<Eigen::Index>(std::floor(spec.train_frac * static_cast<double>(rows) + 1e-9));
  const auto n_val = static_cast<Eigen::Index>(std::floor(spec.val_frac * static_cast<double>(rows) + 1e-9));
  DataSplits out;
  out.train_begin = 0;
  out.val_begin = n_train;
  out.test_begin = n_train + n_val;
  out.train = ds.values.topRows(n_train);
  out.val = ds.values.middleRows(n_train, n_val);
  out.test = ds.values.bottomRows(rows - n_train - n_val);
  return out;
}

/// Per-feature standardization fitted on one matrix (the training split).
struct Standardizer {
  Vector mean;
  Vector std;

  static Standardizer fit(const Matrix& m) {
    detail::require(m.rows() >= 1, ErrorKind::Data, "cannot fit standardization on an empty split");
    Standardizer s;
    s.mean = m.colwise().mean().transpose();
    const Matrix c = m.rowwise() - s.mean.transpose();
    s.std = (c.colwise().squaredNorm().transpose() / static_cast<double>(m.rows())).cwiseSqrt().cwiseMax(NormStats::kStdFloor);
    return s;
  }

  Matrix apply(const Matrix& m) const { return (m.rowwise() - mean.transpose()) * std.cwiseInverse().asDiagonal(); }
  Matrix invert(const Matrix& m) const { return (m * std.asDiagonal()).rowwise() + mean.transpose(); }
};

struct WindowPair {
  TimeSeriesWindow window;  // T x N
  Matrix target;            // tau x N
};

/// Start rows i with [i, i + t + tau) inside the split, stepping by stride.
inline std::vector<Eigen::Index> window_starts(Eigen::Index length, Eigen::Index t, Eigen::Index tau,
                                               Eigen::Index stride = 1) {
  detail::require(t >= 1 && tau >= 1 && stride >= 1, ErrorKind::Config, "window sizes and stride must be positive");
  if (length < t + tau)
    detail::fail(ErrorKind::Data, "split of length " + std::to_string(length) + " is shorter than T + tau = " +
                                      std::to_string(t + tau));
  std::vector<Eigen::Index> starts;
  for (Eigen::Index i = 0; i + t + tau <= length; i += stride) starts.push_back(i);
  return starts;
}

inline WindowPair window_at(const Matrix& split, Eigen::Index start, Eigen::Index t, Eigen::Index tau) {
  return {TimeSeriesWindow{split.middleRows(start, t), start}, split.middleRows(start + t, tau)};
}

inline std::vector<WindowPair> sliding_windows(const Matrix& split, Eigen::Index t, Eigen::Index tau,
                                               Eigen::Index stride = 1) {
  std::vector<WindowPair> out;
  for (const auto i : window_starts(split.rows(), t, tau, stride)) out.push_back(window_at(split, i, t, tau));
  return out;
}

/// Forecast that repeats the last observed row.
inline Matrix persistence_forecast(const TimeSeriesWindow& w, Eigen::Index tau) {
  return w.values.bottomRows(1).replicate(tau, 1);
}

struct Metrics {
  double mse = 0.0;
  double mae = 0.0;
};

/// Element-wise means over every window, horizon step, and variable.
inline Metrics metrics(const std::vector<Matrix>& pred, const std::vector<Matrix>& target) {
  detail::require(pred.size() == target.size() && !pred.empty(), ErrorKind::Dimension,
                  "metrics need matching non-empty prediction and target sets");
  double se = 0.0, ae = 0.0;
  std::int64_t count = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    detail::require(pred[i].rows() == target[i].rows() && pred[i].cols() == target[i].cols(), ErrorKind::Dimension,
                    "metrics: shape mismatch at window " + std::to_string(i));
    const Matrix diff = pred[i] - target[i];
    se += diff.squaredNorm();
    ae += diff.cwiseAbs().sum();
    count += diff.size();
  }
  return {se / static_cast<double>(count), ae / static_cast<double>(count)};
}

}  // namespace dstsgnn
