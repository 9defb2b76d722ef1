#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "dstsgnn/cli.hpp"

namespace {

using dstsgnn::cli::RunConfig;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output;
  int workers = 1;
};

void add_common(CLI::App* sub, Common& c, bool config_required) {
  auto* opt = sub->add_option("--config", c.config, "Run config JSON");
  if (config_required) opt->required()->check(CLI::ExistingFile);
  sub->add_option("--seed", c.seed, "Seed (overrides the config)");
  sub->add_option("--output", c.output, "Output directory (overrides the config)");
  sub->add_option("--workers", c.workers, "Worker threads for per-window work")->check(CLI::PositiveNumber);
}

RunConfig resolve_config(const Common& c) {
  RunConfig rc = c.config.empty() ? RunConfig{} : dstsgnn::cli::load_run_config(c.config);
  dstsgnn::cli::apply(rc, {c.seed, c.output, c.workers});
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DST-SGNN spatio-temporal forecasting"};
  app.set_version_flag("--version", DSTSGNN_VERSION);
  app.require_subcommand(1);

  Common train_c, eval_c, pred_c, verify_c, bench_c;
  std::optional<std::string> eval_ckpt, pred_ckpt, pred_input;
  double verify_scale = 1.0;
  std::string inject;
  std::vector<Eigen::Index> bench_n = {256, 512, 1024, 2048};
  Eigen::Index bench_d = 32;
  int bench_repeats = 5;

  auto* train = app.add_subcommand("train", "Train a model; writes model.ckpt, history.json, run_manifest.json");
  add_common(train, train_c, true);

  auto* evaluate = app.add_subcommand("evaluate", "Test-split MSE/MAE of a checkpoint; writes evaluation.json");
  add_common(evaluate, eval_c, true);
  evaluate->add_option("--checkpoint", eval_ckpt, "Checkpoint (default: <output>/model.ckpt)");

  auto* predict = app.add_subcommand("predict", "Forecast after the last T rows; writes forecast.csv");
  add_common(predict, pred_c, true);
  predict->add_option("--checkpoint", pred_ckpt, "Checkpoint (default: <output>/model.ckpt)");
  predict->add_option("--input", pred_input, "CSV with the dataset's column layout (default: the dataset)");

  auto* verify = app.add_subcommand("verify", "Run every oracle suite; nonzero exit on any failure");
  add_common(verify, verify_c, false);
  verify->add_option("--scale", verify_scale, "Multiplier on instance counts")->check(CLI::PositiveNumber);
  verify->add_option("--inject-fault", inject, "Deliberate fault to show the suites catch it")
      ->check(CLI::IsMember({"isgft-sign"}));

  auto* bench = app.add_subcommand("bench", "Time ldgosm_solve against n; writes bench.csv and bench.json");
  add_common(bench, bench_c, false);
  bench->add_option("--n", bench_n, "Ascending node counts")->delimiter(',');
  bench->add_option("--d", bench_d, "Feature width")->check(CLI::PositiveNumber);
  bench->add_option("--repeats", bench_repeats, "Repeats per n")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : dstsgnn::cli::kExitUsage;
  }

  try {
    if (*train) {
      const RunConfig rc = resolve_config(train_c);
      return dstsgnn::cli::cmd_train(rc, train_c.workers, std::cerr);
    }
    if (*evaluate) {
      const RunConfig rc = resolve_config(eval_c);
      return dstsgnn::cli::cmd_evaluate(rc, eval_ckpt, eval_c.workers, std::cout);
    }
    if (*predict) {
      const RunConfig rc = resolve_config(pred_c);
      return dstsgnn::cli::cmd_predict(rc, pred_ckpt, pred_input, std::cerr);
    }
    if (*verify) {
      dstsgnn::verify::VerifyOptions o;
      if (!verify_c.config.empty()) o.seed = resolve_config(verify_c).model.seed;
      if (verify_c.seed) o.seed = *verify_c.seed;
      o.scale = verify_scale;
      o.inject_isgft_sign_flip = inject == "isgft-sign";
      return dstsgnn::cli::cmd_verify(o, verify_c.output, std::cout);
    }
    if (*bench) {
      dstsgnn::cli::BenchOptions o;
      o.n_list = bench_n;
      o.d = bench_d;
      o.repeats = bench_repeats;
      if (bench_c.seed) o.seed = *bench_c.seed;
      return dstsgnn::cli::cmd_bench(o, bench_c.output, std::cout);
    }
  } catch (const dstsgnn::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return dstsgnn::cli::exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return dstsgnn::cli::kExitInternal;
  }
  return dstsgnn::cli::kExitUsage;
}
