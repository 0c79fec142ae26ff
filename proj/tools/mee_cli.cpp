// Command-line workbench around the library: train single runs, evaluate,
// benchmark the two entropy estimators, or execute a whole suite of runs.

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mee/harness.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> loss;
  std::optional<std::string> channel;
  std::optional<std::string> use_case;
  std::optional<double> snr_db;
  std::optional<std::size_t> epochs;
  bool paper_literal_sign = false;
  bool abs_residual = false;
  bool no_calibrate_bias = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags, bool config_required = false) {
  auto* config = cmd->add_option("--config", flags.config_path, "JSON config file");
  if (config_required) config->required();
  cmd->add_option("--out", flags.out_dir, "output directory")->capture_default_str();
  cmd->add_option("--seed", flags.seed, "experiment seed override");
  cmd->add_option("--loss", flags.loss, "loss override: mee-matrix|mee-kernel|mse|mae");
  cmd->add_option("--channel", flags.channel, "channel override: ideal|awgn|rayleigh");
  cmd->add_option("--snr-db", flags.snr_db, "channel SNR override in dB");
  cmd->add_option("--use-case", flags.use_case,
                  "use case override: regression|localization|synthetic-regression|synthetic-localization");
  cmd->add_option("--epochs", flags.epochs, "epoch count override");
  cmd->add_flag("--paper-literal-sign", flags.paper_literal_sign,
                "use the +1/2 log2 orientation of the matrix entropy");
  cmd->add_flag("--abs-residual", flags.abs_residual, "train on |y - y'| instead of y - y'");
  cmd->add_flag("--no-calibrate-bias", flags.no_calibrate_bias,
                "skip post-training output bias calibration for entropy losses");
}

void apply_overrides(mee::ExperimentConfig& cfg, const CommonFlags& flags) {
  if (flags.use_case) cfg.use_case = mee::use_case_from_string(*flags.use_case);
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.loss) cfg.loss = mee::loss_from_string(*flags.loss);
  if (flags.channel) cfg.channel.mode = mee::channel_mode_from_string(*flags.channel);
  if (flags.snr_db) cfg.channel.snr_db = *flags.snr_db;
  if (flags.epochs) cfg.epochs = *flags.epochs;
  if (flags.paper_literal_sign) cfg.paper_literal_sign = true;
  if (flags.abs_residual) cfg.abs_residual = true;
  if (flags.no_calibrate_bias) cfg.calibrate_bias = false;
}

mee::ExperimentConfig resolve_config(const CommonFlags& flags) {
  mee::ExperimentConfig cfg;
  if (!flags.config_path.empty()) {
    cfg = mee::load_experiment_config(flags.config_path);
  } else if (flags.use_case) {
    const mee::UseCase uc = mee::use_case_from_string(*flags.use_case);
    cfg = (uc == mee::UseCase::Localization || uc == mee::UseCase::SyntheticLocalization)
              ? mee::localization_defaults()
              : mee::regression_defaults();
    cfg.use_case = uc;
  } else {
    cfg = mee::regression_defaults();
  }
  apply_overrides(cfg, flags);
  cfg.validate();
  return cfg;
}

int cmd_train(const CommonFlags& flags) {
  const mee::ExperimentConfig cfg = resolve_config(flags);
  const mee::DataBundle data = mee::build_data(cfg);
  const mee::TrainOutcome outcome = mee::train(cfg, data);

  const std::string run_id = mee::compose_run_id(cfg, 0);
  std::filesystem::create_directories(flags.out_dir);
  const auto csv_path = std::filesystem::path(flags.out_dir) / (run_id + ".csv");
  mee::detail::atomic_write(csv_path, mee::training_csv(outcome.log));

  const mee::EpochRecord& last = outcome.log.epochs.back();
  std::printf("run %s: %zu epochs in %.2fs\n", run_id.c_str(), cfg.epochs, outcome.total_seconds);
  std::printf("final loss %.6g  sigma %.6g  train_mae %.6g  test_mae %.6g  test_med %.6g\n",
              last.loss, last.sigma, last.train_mae, last.test_mae, last.test_med);
  std::printf("log written to %s\n", csv_path.string().c_str());
  return 0;
}

int cmd_eval(const CommonFlags& flags) {
  const mee::ExperimentConfig cfg = resolve_config(flags);
  const mee::DataBundle data = mee::build_data(cfg);
  const mee::TrainOutcome outcome = mee::train(cfg, data);

  mee::ChannelConfig rx_cfg = cfg.channel;
  rx_cfg.seed = mee::derive_seed(mee::derive_seed(cfg.seed, cfg.channel.seed), 99);
  const mee::Matrix test_rx = mee::transmit(data.test_features, data.codec, rx_cfg);
  const mee::EvalReport report = mee::evaluate_med(outcome.net, test_rx, data.test_targets);

  std::filesystem::create_directories(flags.out_dir);
  const auto csv_path = std::filesystem::path(flags.out_dir) / "eval.csv";
  std::string csv = "run_id,loss,channel,snr_db,samples,med,mae,mse\n";
  csv += mee::compose_run_id(cfg, 0) + "," + mee::to_string(cfg.loss) + "," +
         mee::to_string(cfg.channel.mode) + "," + mee::detail::format_metric(cfg.channel.snr_db) +
         "," + std::to_string(report.samples) + "," + mee::detail::format_metric(report.med) + "," +
         mee::detail::format_metric(report.mae) + "," + mee::detail::format_metric(report.mse) +
         "\n";
  mee::detail::atomic_write(csv_path, csv);

  std::printf("test samples %zu  med %.6g  mae %.6g  mse %.6g\n", report.samples, report.med,
              report.mae, report.mse);
  std::printf("report written to %s\n", csv_path.string().c_str());
  return 0;
}

int cmd_bench(const CommonFlags& flags) {
  mee::ExperimentConfig cfg = flags.config_path.empty()
                                  ? mee::benchmark_default_config()
                                  : mee::load_experiment_config(flags.config_path);
  apply_overrides(cfg, flags);
  cfg.validate();

  const mee::BenchmarkReport report = mee::benchmark_complexity(cfg);
  std::filesystem::create_directories(flags.out_dir);
  mee::detail::atomic_write(std::filesystem::path(flags.out_dir) / "bench.csv",
                            mee::benchmark_csv(report));
  mee::detail::atomic_write(
      std::filesystem::path(flags.out_dir) / "bench.svg",
      mee::bar_chart_svg("training time, kernel vs matrix estimator (s)",
                         {"kernel", "matrix"}, {report.kernel_seconds, report.matrix_seconds}));

  std::printf("batch %zu, %zu steps/epoch, %zu epochs timed\n", report.batch_size,
              report.steps_per_epoch, report.epochs_timed);
  std::printf("kernel  %.3fs\nmatrix  %.3fs\nspeedup %.2fx\n", report.kernel_seconds,
              report.matrix_seconds, report.speedup);
  std::printf("max per-step divergence, cached vs naive matrix path: %.3g\n",
              report.max_step_divergence);
  return 0;
}

int cmd_suite(const CommonFlags& flags) {
  mee::SuiteFile suite = mee::load_suite_config(flags.config_path);
  for (mee::ExperimentConfig& run : suite.runs) apply_overrides(run, flags);

  std::string out_dir = flags.out_dir;
  if (out_dir == "out" && !suite.output_dir.empty()) out_dir = suite.output_dir;

  const mee::SuiteResult result = mee::run_suite(suite.runs, out_dir);
  for (const mee::SuiteRun& run : result.runs) {
    if (run.ok)
      std::printf("[ok]   %-32s med %.6g  mae %.6g  (%.2fs)\n", run.run_id.c_str(),
                  run.final_eval.med, run.final_eval.mae, run.total_seconds);
    else
      std::printf("[fail] %-32s %s\n", run.run_id.c_str(), run.error.c_str());
  }
  std::printf("artifacts in %s\n", result.out_dir.string().c_str());
  return result.all_ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"minimum-error-entropy training workbench"};
  app.require_subcommand(1);

  CommonFlags train_flags, eval_flags, bench_flags, suite_flags;
  CLI::App* train_cmd = app.add_subcommand("train", "train one run and write its epoch log");
  add_common_flags(train_cmd, train_flags);
  CLI::App* eval_cmd = app.add_subcommand("eval", "train one run and report test metrics");
  add_common_flags(eval_cmd, eval_flags);
  CLI::App* bench_cmd = app.add_subcommand("bench", "time kernel vs matrix entropy training");
  add_common_flags(bench_cmd, bench_flags);
  CLI::App* suite_cmd = app.add_subcommand("suite", "run a suite of configs and chart them");
  add_common_flags(suite_cmd, suite_flags, /*config_required=*/true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) return cmd_train(train_flags);
    if (eval_cmd->parsed()) return cmd_eval(eval_flags);
    if (bench_cmd->parsed()) return cmd_bench(bench_flags);
    if (suite_cmd->parsed()) return cmd_suite(suite_flags);
  } catch (const mee::Error& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 2;
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "unexpected error: %s\n", ex.what());
    return 3;
  }
  return 0;
}
