#pragma once

// Run configuration and the command implementations behind the CLI.
//
// A run config is one JSON document:
//
//   {
//     "model":      { ModelConfig keys },
//     "data":       { "path": "...", "manifest": {...} | "manifest.json",
//                     "split": {"train": 0.7, "val": 0.1, "test": 0.2},
//                     "standardize": true },
//     "output_dir": "runs/x"
//   }
//
// Relative paths resolve against the directory holding the config file.

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "dstsgnn/bench.hpp"
#include "dstsgnn/checkpoint.hpp"
#include "dstsgnn/data.hpp"
#include "dstsgnn/errors.hpp"
#include "dstsgnn/model.hpp"
#include "dstsgnn/train.hpp"
#include "dstsgnn/verify.hpp"

#ifndef DSTSGNN_VERSION
#define DSTSGNN_VERSION "0.1.0"
#endif

namespace dstsgnn::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;

struct DataConfig {
  std::string path;
  DatasetManifest manifest;
  SplitSpec split;
  bool standardize = true;
};

struct RunConfig {
  ModelConfig model;
  std::optional<DataConfig> data;
  std::string output_dir = "runs/default";

  nlohmann::json to_json() const {
    nlohmann::json j{{"model", model.to_json()}, {"output_dir", output_dir}};
    if (data)
      j["data"] = {{"path", data->path},
                   {"manifest", data->manifest.to_json()},
                   {"split", {{"train", data->split.train_frac}, {"val", data->split.val_frac}, {"test", data->split.test_frac}}},
                   {"standardize", data->standardize}};
    return j;
  }
};

namespace detail {

inline nlohmann::json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) dstsgnn::detail::fail(ErrorKind::Io, "cannot open '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    dstsgnn::detail::fail(ErrorKind::Config, "'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

inline std::string resolve(const fs::path& base, const std::string& p) {
  if (p.empty() || fs::path(p).is_absolute()) return p;
  return (base / p).lexically_normal().string();
}

inline SplitSpec split_from_json(const nlohmann::json& j) {
  dstsgnn::detail::require(j.is_object(), ErrorKind::Config, "data.split must be an object");
  SplitSpec s;
  for (const auto& [key, v] : j.items()) {
    if (key == "train") s.train_frac = v.get<double>();
    else if (key == "val") s.val_frac = v.get<double>();
    else if (key == "test") s.test_frac = v.get<double>();
    else dstsgnn::detail::fail(ErrorKind::Config, "unknown data.split key '" + key + "'");
  }
  s.validate();
  return s;
}

inline DataConfig data_from_json(const nlohmann::json& j, const fs::path& base) {
  dstsgnn::detail::require(j.is_object(), ErrorKind::Config, "data must be an object");
  DataConfig d;
  bool have_manifest = false;
  for (const auto& [key, v] : j.items()) {
    if (key == "path") {
      d.path = resolve(base, v.get<std::string>());
    } else if (key == "manifest") {
      d.manifest = v.is_string() ? DatasetManifest::from_json(read_json_file(resolve(base, v.get<std::string>())))
                                 : DatasetManifest::from_json(v);
      have_manifest = true;
    } else if (key == "split") {
      d.split = split_from_json(v);
    } else if (key == "standardize") {
      d.standardize = v.get<bool>();
    } else {
      dstsgnn::detail::fail(ErrorKind::Config, "unknown data key '" + key + "'");
    }
  }
  dstsgnn::detail::require(!d.path.empty(), ErrorKind::Config, "data.path is required");
  dstsgnn::detail::require(have_manifest, ErrorKind::Config, "data.manifest is required");
  return d;
}

}  // namespace detail

/// Parses a run config; `base` anchors relative paths.
inline RunConfig run_config_from_json(const nlohmann::json& j, const fs::path& base = {}) {
  dstsgnn::detail::require(j.is_object(), ErrorKind::Config, "run config must be a JSON object");
  RunConfig rc;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "model") rc.model.merge_json(v);
      else if (key == "data") rc.data = detail::data_from_json(v, base);
      else if (key == "output_dir") rc.output_dir = detail::resolve(base, v.get<std::string>());
      else dstsgnn::detail::fail(ErrorKind::Config, "unknown run config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    dstsgnn::detail::fail(ErrorKind::Config, std::string("run config: ") + e.what());
  }
  return rc;
}

inline RunConfig load_run_config(const std::string& path) {
  return run_config_from_json(detail::read_json_file(path), fs::path(path).parent_path());
}

/// Flag values that override the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output;
  int workers = 1;
};

inline void apply(RunConfig& rc, const Overrides& o) {
  if (o.seed) rc.model.seed = *o.seed;
  if (o.output) rc.output_dir = *o.output;
  dstsgnn::detail::require(o.workers >= 1, ErrorKind::Config, "--workers must be >= 1");
}

/// Exit status for an error kind: bad inputs are usage errors, numerical failures are internal.
inline int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::Config:
    case ErrorKind::Data:
    case ErrorKind::Io:
    case ErrorKind::Parse:
    case ErrorKind::Shape:
    case ErrorKind::Format:
      return kExitUsage;
    default:
      return kExitInternal;
  }
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) dstsgnn::detail::fail(ErrorKind::Io, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) dstsgnn::detail::fail(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

inline void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

inline fs::path ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) dstsgnn::detail::fail(ErrorKind::Io, "cannot create output directory '" + dir + "': " + ec.message());
  return fs::path(dir);
}

struct PreparedData {
  Dataset dataset;
  DataSplits splits;  // standardized when a scaler is present
  std::optional<Standardizer> scaler;
};

inline const DataConfig& require_data(const RunConfig& rc) {
  if (!rc.data) dstsgnn::detail::fail(ErrorKind::Config, "config has no 'data' section");
  return *rc.data;
}

inline Dataset load_dataset(const DataConfig& d) {
  if (!fs::exists(d.path)) dstsgnn::detail::fail(ErrorKind::Io, "dataset not found: '" + d.path + "'");
  return load_csv(d.path, d.manifest);
}

/// Loads, splits, and (optionally) standardizes with statistics of the training split.
/// A scaler passed in (from a checkpoint) is reused instead of refitting.
inline PreparedData prepare_data(const DataConfig& d, std::optional<Standardizer> scaler = std::nullopt) {
  PreparedData out;
  out.dataset = load_dataset(d);
  out.splits = chronological_split(out.dataset, d.split);
  if (!scaler && d.standardize) scaler = Standardizer::fit(out.splits.train);
  if (scaler) {
    dstsgnn::detail::require(scaler->mean.size() == out.dataset.values.cols(), ErrorKind::Config,
                             "checkpoint scaler does not match the dataset's feature count");
    out.splits.train = scaler->apply(out.splits.train);
    out.splits.val = scaler->apply(out.splits.val);
    out.splits.test = scaler->apply(out.splits.test);
  }
  out.scaler = std::move(scaler);
  return out;
}

inline nlohmann::json history_json(const TrainResult& r) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : r.history) epochs.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_loss", e.val_loss}});
  return {{"epochs", epochs}, {"best_epoch", r.best_epoch}, {"best_val_mae", r.best_val}};
}

inline int cmd_train(const RunConfig& rc, int workers, std::ostream& log) {
  rc.model.validate();
  const PreparedData pd = prepare_data(require_data(rc));
  const fs::path out = ensure_dir(rc.output_dir);
  log << "train: " << pd.dataset.values.rows() << " rows x " << pd.dataset.values.cols() << " features, split "
      << pd.splits.train.rows() << "/" << pd.splits.val.rows() << "/" << pd.splits.test.rows() << "\n";

  TrainOptions opts;
  opts.workers = workers;
  opts.on_epoch = [&](const EpochRecord& e) {
    log << "epoch " << e.epoch << " train_mae " << e.train_loss << " val_mae " << e.val_loss << "\n";
  };
  const TrainResult result = train(rc.model, pd.splits, opts);

  save_checkpoint({rc.model, result.params, pd.scaler}, (out / "model.ckpt").string());
  write_json(out / "history.json", history_json(result));
  write_json(out / "run_manifest.json", {{"command", "train"},
                                          {"code_version", DSTSGNN_VERSION},
                                          {"seed", rc.model.seed},
                                          {"workers", workers},
                                          {"config", rc.to_json()},
                                          {"param_count", count_params(result.params)},
                                          {"artifacts", {"model.ckpt", "history.json", "run_manifest.json"}}});
  log << "best epoch " << result.best_epoch << " val_mae " << result.best_val << "; wrote " << out.string() << "\n";
  return kExitOk;
}

inline std::string checkpoint_path(const RunConfig& rc, const std::optional<std::string>& explicit_path) {
  return explicit_path ? *explicit_path : (fs::path(rc.output_dir) / "model.ckpt").string();
}

inline nlohmann::json evaluation_json(const std::string& name, const ModelConfig& cfg, const Evaluation& e) {
  return {{"dataset", name},
          {"horizon", cfg.horizon},
          {"mse", e.model.mse},
          {"mae", e.model.mae},
          {"window_count", e.window_count},
          {"persistence", {{"mse", e.persistence.mse}, {"mae", e.persistence.mae}}}};
}

/// Test-split metrics in the training split's standardized space.
inline int cmd_evaluate(const RunConfig& rc, const std::optional<std::string>& ckpt, int workers, std::ostream& log) {
  const Checkpoint ck = load_checkpoint(checkpoint_path(rc, ckpt));
  const PreparedData pd = prepare_data(require_data(rc), ck.scaler);
  const Evaluation e = evaluate_split(ck.params, ck.config, pd.splits.test, workers);
  const nlohmann::json j = evaluation_json(pd.dataset.name, ck.config, e);
  write_json(ensure_dir(rc.output_dir) / "evaluation.json", j);
  log << j.dump() << "\n";
  return kExitOk;
}

/// Forecasts the horizon after the last T rows of `input` (default: the configured dataset),
/// in the input's own units. Writes forecast.csv with one row per step.
inline int cmd_predict(const RunConfig& rc, const std::optional<std::string>& ckpt,
                       const std::optional<std::string>& input, std::ostream& log) {
  const Checkpoint ck = load_checkpoint(checkpoint_path(rc, ckpt));
  const DataConfig& d = require_data(rc);
  Dataset ds;
  if (input) {
    if (!fs::exists(*input)) dstsgnn::detail::fail(ErrorKind::Io, "input not found: '" + *input + "'");
    DatasetManifest m = d.manifest;
    m.rows = 0;
    ds = load_csv(*input, m);
  } else {
    ds = load_dataset(d);
  }
  dstsgnn::detail::require(ds.values.rows() >= ck.config.t, ErrorKind::Data,
                           "need at least T=" + std::to_string(ck.config.t) + " rows to predict, input has " +
                               std::to_string(ds.values.rows()));
  Matrix window = ds.values.bottomRows(ck.config.t);
  if (ck.scaler) window = ck.scaler->apply(window);
  Matrix y = forward(ck.params, ck.config, {window, ds.values.rows() - ck.config.t}).y;
  if (ck.scaler) y = ck.scaler->invert(y);

  std::ostringstream csv;
  csv << "step";
  for (Eigen::Index v = 0; v < y.cols(); ++v)
    csv << ',' << (static_cast<std::size_t>(v) < ds.feature_names.size() ? ds.feature_names[static_cast<std::size_t>(v)]
                                                                         : "v" + std::to_string(v));
  csv << '\n' << std::setprecision(17);
  for (Eigen::Index t = 0; t < y.rows(); ++t) {
    csv << t + 1;
    for (Eigen::Index v = 0; v < y.cols(); ++v) csv << ',' << y(t, v);
    csv << '\n';
  }
  const fs::path out = ensure_dir(rc.output_dir) / "forecast.csv";
  write_text(out, csv.str());
  log << "wrote " << y.rows() << " forecast steps to " << out.string() << "\n";
  return kExitOk;
}

inline nlohmann::json suite_json(const verify::SuiteResult& r) {
  return {{"name", r.name},           {"passed", r.passed},   {"worst", r.worst}, {"threshold", r.threshold},
          {"cases", r.cases},         {"seconds", r.seconds}, {"detail", r.detail}};
}

inline int cmd_verify(const verify::VerifyOptions& o, const std::optional<std::string>& output, std::ostream& log) {
  dstsgnn::detail::require(o.scale > 0.0 && std::isfinite(o.scale), ErrorKind::Config, "--scale must be positive");
  const auto results = verify::run_all(o);
  bool ok = true;
  nlohmann::json suites = nlohmann::json::array();
  for (const auto& r : results) {
    ok = ok && r.passed;
    log << (r.passed ? "PASS " : "FAIL ") << std::left << std::setw(26) << r.name << " worst=" << std::setprecision(3)
        << std::scientific << r.worst << " threshold=" << r.threshold << std::defaultfloat << " cases=" << r.cases
        << " time=" << std::fixed << std::setprecision(2) << r.seconds << "s" << std::defaultfloat
        << std::setprecision(6) << (r.detail.empty() ? "" : " " + r.detail) << "\n";
    suites.push_back(suite_json(r));
  }
  log << (ok ? "verify: all suites passed" : "verify: FAILED") << "\n";
  if (output)
    write_json(ensure_dir(*output) / "verify.json",
               {{"seed", o.seed}, {"scale", o.scale}, {"inject_isgft_sign_flip", o.inject_isgft_sign_flip},
                {"passed", ok}, {"suites", suites}});
  return ok ? kExitOk : kExitInternal;
}

struct BenchOptions {
  std::vector<Eigen::Index> n_list = {256, 512, 1024, 2048};
  Eigen::Index d = 32;
  int repeats = 5;
  std::uint64_t seed = 11;
};

inline int cmd_bench(const BenchOptions& o, const std::optional<std::string>& output, std::ostream& log) {
  const BenchResult r = bench_ldgosm(o.n_list, o.d, o.repeats, o.seed);
  std::ostringstream csv;
  write_bench_csv(csv, r);
  log << csv.str() << "slope " << r.slope << "\n";
  if (output) {
    const fs::path out = ensure_dir(*output);
    write_text(out / "bench.csv", csv.str());
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.rows) rows.push_back({{"n", row.n}, {"median_seconds", row.median_seconds}});
    const AffineFit fit = affine_fit(r.rows);
    write_json(out / "bench.json", {{"d", o.d},
                                    {"repeats", o.repeats},
                                    {"slope", r.slope},
                                    {"fixed_seconds", fit.fixed_seconds},
                                    {"per_node_seconds", fit.per_node_seconds},
                                    {"rows", rows}});
  }
  return kExitOk;
}

}  // namespace dstsgnn::cli
