#pragma once

// Experiment harness: materialize a dataset, train a network against the
// configured loss over a simulated channel, evaluate, and emit CSV/SVG
// artifacts. The training loop follows the adaptive-bandwidth scheme: the
// kernel width starts from the first batch's median distance and is
// re-estimated from the current batch after every optimizer step, never
// differentiated through.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mee/channel.hpp"
#include "mee/config.hpp"
#include "mee/datasets.hpp"
#include "mee/entropy.hpp"
#include "mee/error.hpp"
#include "mee/matrix.hpp"
#include "mee/nn.hpp"
#include "mee/rng.hpp"
#include "mee/svg.hpp"

namespace mee {

// Train/test matrices plus the codec calibrated on the training features.
struct DataBundle {
  Matrix train_features;
  Matrix train_targets;
  Matrix test_features;
  Matrix test_targets;
  FeatureCodec codec;
};

// Materialize the configured dataset and split it. All randomness below the
// experiment seed is derived, so the same config rebuilds the same bundle.
inline DataBundle build_data(const ExperimentConfig& cfg) {
  const SplitSpec split_spec{cfg.train_fraction, derive_seed(cfg.seed, 11)};
  switch (cfg.use_case) {
    case UseCase::SyntheticRegression: {
      const TabularDataset ds =
          synth_regression(cfg.data.synth_samples, cfg.data.outlier_fraction,
                           derive_seed(cfg.seed, 12));
      auto [train, test] = split(ds, split_spec);
      FeatureCodec codec = FeatureCodec::fit(train.features);
      return DataBundle{std::move(train.features), std::move(train.targets),
                        std::move(test.features), std::move(test.targets), std::move(codec)};
    }
    case UseCase::SyntheticLocalization: {
      const LocalizationDataset ds =
          synth_localization(cfg.data.synth_users, cfg.data.synth_aps, derive_seed(cfg.seed, 13),
                             cfg.data.shadow_sigma_db);
      auto [train, test] = split(ds, split_spec);
      FeatureCodec codec = FeatureCodec::fit(train.rssi);
      return DataBundle{std::move(train.rssi), std::move(train.positions), std::move(test.rssi),
                        std::move(test.positions), std::move(codec)};
    }
    case UseCase::Regression: {
      if (cfg.data.csv_path.empty())
        throw ConfigError("config: use_case 'regression' needs data.csv_path");
      TabularDataset ds = load_csv(cfg.data.csv_path, cfg.data.target_columns);
      minmax_normalize_columns(ds.features);
      auto [train, test] = split(ds, split_spec);
      FeatureCodec codec = FeatureCodec::fit(train.features);
      return DataBundle{std::move(train.features), std::move(train.targets),
                        std::move(test.features), std::move(test.targets), std::move(codec)};
    }
    case UseCase::Localization: {
      if (cfg.data.csv_path.empty())
        throw ConfigError("config: use_case 'localization' needs data.csv_path");
      if (cfg.data.coordinate_columns.size() != 2)
        throw ConfigError("config: localization needs exactly 2 coordinate_columns");
      const TabularDataset raw = load_csv(cfg.data.csv_path, cfg.data.coordinate_columns);
      PreprocessSpec spec;
      spec.ap_prefix = cfg.data.ap_prefix;
      spec.missing_sentinel = cfg.data.missing_sentinel;
      spec.floor_dbm = cfg.data.floor_dbm;
      spec.drop_threshold = cfg.data.drop_threshold;
      const LocalizationDataset ds = preprocess_localization(raw, spec);
      auto [train, test] = split(ds, split_spec);
      FeatureCodec codec = FeatureCodec::fit(train.rssi);
      return DataBundle{std::move(train.rssi), std::move(train.positions), std::move(test.rssi),
                        std::move(test.positions), std::move(codec)};
    }
  }
  throw ConfigError("config: unknown use_case value");
}

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;      // mean per-step loss over the epoch
  double sigma = 0.0;     // bandwidth after the epoch's last update
  double train_mae = 0.0;
  double test_mae = 0.0;
  double test_med = 0.0;  // mean Euclidean distance (equals MAE for 1-D targets)
  double seconds = 0.0;
};

struct TrainingLog {
  std::vector<EpochRecord> epochs;
};

struct EvalReport {
  std::size_t samples = 0;
  double med = 0.0;
  double mae = 0.0;
  double mse = 0.0;
};

// Mean Euclidean distance (plus MAE/MSE) between predictions and targets.
inline EvalReport evaluate_med(const Network& net, const Matrix& features, const Matrix& targets) {
  if (features.rows() == 0) throw EvalError("evaluate_med: empty evaluation set");
  if (features.rows() != targets.rows())
    throw ShapeError("evaluate_med: feature/target row mismatch");
  const Matrix pred = predict(net, features);
  if (pred.cols() != targets.cols())
    throw ShapeError("evaluate_med: network output dim does not match targets");

  EvalReport report;
  report.samples = features.rows();
  double med_sum = 0.0, abs_sum = 0.0, sq_sum = 0.0;
  for (std::size_t i = 0; i < targets.rows(); ++i) {
    double row_sq = 0.0;
    for (std::size_t k = 0; k < targets.cols(); ++k) {
      const double r = targets(i, k) - pred(i, k);
      row_sq += r * r;
      abs_sum += std::abs(r);
      sq_sum += r * r;
    }
    med_sum += std::sqrt(row_sq);
  }
  const double n = static_cast<double>(targets.rows());
  const double nd = n * static_cast<double>(targets.cols());
  report.med = med_sum / n;
  report.mae = abs_sum / nd;
  report.mse = sq_sum / nd;
  return report;
}

struct TrainOutcome {
  Network net;
  TrainingLog log;
  double total_seconds = 0.0;
};

namespace detail {

inline LossResult compute_loss(LossKind kind, const ErrorBatch& errors, Bandwidth sigma,
                               bool paper_literal_sign) {
  switch (kind) {
    case LossKind::MeeMatrix: return matrix_mee(errors, sigma, paper_literal_sign);
    case LossKind::MeeMatrixNaive: return matrix_mee_reference(errors, sigma, paper_literal_sign);
    case LossKind::MeeKernel: return kernel_mee(errors, sigma);
    case LossKind::Mse: return mse_loss(errors);
    case LossKind::Mae: return mae_loss(errors);
  }
  throw ConfigError("unknown loss value");
}

inline double mean_abs(const Matrix& a, const Matrix& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a.data()[i] - b.data()[i]);
  return s / static_cast<double>(a.size());
}

}  // namespace detail

// Train a freshly initialized network on the bundle per the config. Each
// optimizer step samples a mini-batch, pushes its features through the
// channel with fresh derived noise, forms residuals e = y - y' (optionally
// |y - y'|), evaluates the loss at the current bandwidth, backpropagates the
// exact loss gradient, applies Adam, and then re-estimates the bandwidth from
// the batch. Metrics per epoch go through the channel as well, on their own
// noise streams. `step_losses`, when given, collects every step's loss value.
inline TrainOutcome train(const ExperimentConfig& cfg, const DataBundle& data,
                          std::vector<double>* step_losses = nullptr) {
  cfg.validate();
  const std::size_t train_n = data.train_features.rows();
  const std::size_t batch = cfg.batch_size;
  if (batch > train_n)
    throw ConfigError("config: batch_size " + std::to_string(batch) +
                      " exceeds training set size " + std::to_string(train_n));
  if (is_mee(cfg.loss) && train_n % batch == 1)
    throw ConfigError("config: train size " + std::to_string(train_n) + " modulo batch_size " +
                      std::to_string(batch) +
                      " leaves a single-sample final batch; entropy losses need pairs");
  if (cfg.layer_sizes.back() != data.train_targets.cols())
    throw ConfigError("config: last layer width " + std::to_string(cfg.layer_sizes.back()) +
                      " != target dimension " + std::to_string(data.train_targets.cols()));

  std::vector<std::size_t> widths;
  widths.push_back(data.train_features.cols());
  widths.insert(widths.end(), cfg.layer_sizes.begin(), cfg.layer_sizes.end());
  Network net = init_network(widths, derive_seed(cfg.seed, 1));

  AdamConfig adam_cfg;
  adam_cfg.learning_rate = cfg.learning_rate;
  AdamState adam(net, adam_cfg);

  const std::uint64_t noise_master = derive_seed(cfg.seed, cfg.channel.seed);
  const std::uint64_t tx_train = derive_seed(noise_master, 2);
  const std::uint64_t tx_eval = derive_seed(noise_master, 3);
  const std::uint64_t shuffle_master = derive_seed(cfg.seed, 4);

  const std::size_t steps = (train_n + batch - 1) / batch;
  std::optional<Bandwidth> sigma;

  TrainOutcome outcome{std::move(net), {}, 0.0};
  const auto run_start = std::chrono::steady_clock::now();

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    const std::vector<std::size_t> order = shuffled_indices(train_n, derive_seed(shuffle_master, epoch));
    double loss_sum = 0.0;

    for (std::size_t step = 0; step < steps; ++step) {
      const std::size_t lo = step * batch;
      const std::size_t hi = std::min(lo + batch, train_n);
      const std::vector<std::size_t> idx(order.begin() + lo, order.begin() + hi);

      ChannelConfig tx_cfg = cfg.channel;
      tx_cfg.seed = derive_seed(tx_train, epoch, step);
      const Matrix batch_x = transmit(take_rows(data.train_features, idx), data.codec, tx_cfg);
      const Matrix batch_y = take_rows(data.train_targets, idx);

      const ForwardPass pass = forward(outcome.net, batch_x);

      Matrix residuals(batch_y.rows(), batch_y.cols());
      Matrix residual_signs(batch_y.rows(), batch_y.cols(), 1.0);
      for (std::size_t i = 0; i < residuals.size(); ++i) {
        const double r = batch_y.data()[i] - pass.outputs.data()[i];
        if (cfg.abs_residual) {
          residuals.data()[i] = std::abs(r);
          residual_signs.data()[i] = (r > 0.0) ? 1.0 : (r < 0.0 ? -1.0 : 0.0);
        } else {
          residuals.data()[i] = r;
        }
      }

      LossResult loss;
      try {
        const ErrorBatch errors(residuals);
        if (!sigma) sigma = median_bandwidth(errors);
        loss = detail::compute_loss(cfg.loss, errors, *sigma, cfg.paper_literal_sign);
        if (!std::isfinite(loss.value))
          throw NumericError("loss value " + std::to_string(loss.value));

        Matrix d_outputs(residuals.rows(), residuals.cols());
        if (cfg.abs_residual) {
          // e = |y - y'|: chain through d|r|/dy' = -sign(r).
          for (std::size_t i = 0; i < d_outputs.size(); ++i)
            d_outputs.data()[i] = -residual_signs.data()[i] * loss.grad.data()[i];
        } else {
          // e = y - y': de/dy' = -1.
          for (std::size_t i = 0; i < d_outputs.size(); ++i)
            d_outputs.data()[i] = -loss.grad.data()[i];
        }
        const Gradients grads = backward(outcome.net, pass.trace, d_outputs);
        adam_step(outcome.net, grads, adam);
        sigma = median_bandwidth(errors);  // adapt after the parameter update
      } catch (const NumericError& ex) {
        throw TrainingError("epoch " + std::to_string(epoch) + " step " + std::to_string(step) +
                            ": " + ex.what());
      }

      loss_sum += loss.value;
      if (step_losses) step_losses->push_back(loss.value);
    }

    EpochRecord record;
    record.epoch = epoch;
    record.loss = loss_sum / static_cast<double>(steps);
    record.sigma = sigma ? sigma->sigma() : 0.0;

    const bool evaluate_now =
        (cfg.eval_every > 0 && epoch % cfg.eval_every == 0) || epoch == cfg.epochs;
    if (evaluate_now) {
      ChannelConfig eval_train_cfg = cfg.channel;
      eval_train_cfg.seed = derive_seed(tx_eval, epoch, 0);
      const Matrix train_rx = transmit(data.train_features, data.codec, eval_train_cfg);
      record.train_mae = detail::mean_abs(predict(outcome.net, train_rx), data.train_targets);

      ChannelConfig eval_test_cfg = cfg.channel;
      eval_test_cfg.seed = derive_seed(tx_eval, epoch, 1);
      const Matrix test_rx = transmit(data.test_features, data.codec, eval_test_cfg);
      const EvalReport test_report = evaluate_med(outcome.net, test_rx, data.test_targets);
      record.test_mae = test_report.mae;
      record.test_med = test_report.med;
    } else {
      record.train_mae = std::nan("");
      record.test_mae = std::nan("");
      record.test_med = std::nan("");
    }

    record.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_start).count();
    outcome.log.epochs.push_back(record);
  }

  // Entropy losses are shift-invariant, so the trained predictor can carry a
  // constant offset. Calibrate it away on the clean (noise-free) presentation
  // of the training features.
  if (cfg.calibrate_bias && is_mee(cfg.loss)) {
    const Matrix clean =
        transmit(data.train_features, data.codec, {ChannelMode::Ideal, cfg.channel.snr_db, 0});
    const Matrix pred = predict(outcome.net, clean);
    std::vector<double> mean_residual(data.train_targets.cols(), 0.0);
    for (std::size_t i = 0; i < data.train_targets.rows(); ++i)
      for (std::size_t k = 0; k < data.train_targets.cols(); ++k)
        mean_residual[k] += data.train_targets(i, k) - pred(i, k);
    for (std::size_t k = 0; k < mean_residual.size(); ++k) {
      mean_residual[k] /= static_cast<double>(data.train_targets.rows());
      outcome.net.layers().back().biases[k] += mean_residual[k];
    }
  }

  outcome.total_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - run_start).count();
  return outcome;
}

inline TrainOutcome train(const ExperimentConfig& cfg) { return train(cfg, build_data(cfg)); }

// ---------------------------------------------------------------------------
// CSV emission

namespace detail {

inline std::string format_metric(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_seconds(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline void atomic_write(const std::filesystem::path& path, const std::string& contents) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out << contents;
    if (!out) throw IoError("short write to '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move '" + tmp.string() + "' into place: " + ec.message());
}

}  // namespace detail

inline std::string training_csv(const TrainingLog& log) {
  std::string csv = "epoch,loss,sigma,train_mae,test_mae,test_med,seconds\n";
  for (const EpochRecord& r : log.epochs) {
    csv += std::to_string(r.epoch) + "," + detail::format_metric(r.loss) + "," +
           detail::format_metric(r.sigma) + "," + detail::format_metric(r.train_mae) + "," +
           detail::format_metric(r.test_mae) + "," + detail::format_metric(r.test_med) + "," +
           detail::format_seconds(r.seconds) + "\n";
  }
  return csv;
}

// ---------------------------------------------------------------------------
// Complexity benchmark: identical training runs, three loss evaluation paths.

struct BenchmarkReport {
  std::size_t batch_size = 0;
  std::size_t steps_per_epoch = 0;
  std::size_t epochs_timed = 0;
  double kernel_seconds = 0.0;
  double matrix_seconds = 0.0;
  double speedup = 0.0;               // kernel / matrix
  double max_step_divergence = 0.0;   // cached vs naive matrix path, per step
};

// Small-but-real default workload: entropy cost dominates enough to compare
// estimator complexity honestly, and a full run stays in the seconds range.
inline ExperimentConfig benchmark_default_config() {
  ExperimentConfig cfg = regression_defaults();
  cfg.run_id = "bench";
  cfg.use_case = UseCase::SyntheticRegression;
  cfg.loss = LossKind::MeeMatrix;
  cfg.channel = {ChannelMode::Ideal, 5.0, 0};
  cfg.layer_sizes = {8, 1};
  cfg.epochs = 30;
  cfg.batch_size = 32;
  cfg.learning_rate = 5e-4;
  cfg.seed = 1;
  cfg.eval_every = 0;  // metrics only on the final epoch; timing stays on the loop
  cfg.data.synth_samples = 4000;
  cfg.data.outlier_fraction = 0.1;
  return cfg;
}

// Time kernel-form vs matrix-form training end to end on the same data and
// seed, and verify that the cached matrix path and its naive re-evaluation
// produce the same per-step losses. Timing alternates the two arms over
// three repetitions and keeps each arm's best, after an untimed warm-up
// epoch, so background scheduler noise cannot flip the comparison.
inline BenchmarkReport benchmark_complexity(const ExperimentConfig& base) {
  ExperimentConfig cfg = base;
  cfg.validate();
  const DataBundle data = build_data(cfg);

  auto arm = [&](LossKind kind, std::size_t epochs) {
    ExperimentConfig c = cfg;
    c.loss = kind;
    c.epochs = epochs;
    return c;
  };

  // Warm-up (caches, allocator, cpu clocks), excluded from timing.
  train(arm(LossKind::MeeKernel, 1), data);
  train(arm(LossKind::MeeMatrix, 1), data);

  BenchmarkReport report;
  report.batch_size = cfg.batch_size;
  report.steps_per_epoch = (data.train_features.rows() + cfg.batch_size - 1) / cfg.batch_size;
  report.epochs_timed = cfg.epochs;

  auto timed = [&](LossKind kind) {
    const auto t0 = std::chrono::steady_clock::now();
    train(arm(kind, cfg.epochs), data);
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  constexpr int kRepetitions = 3;
  report.kernel_seconds = 1e300;
  report.matrix_seconds = 1e300;
  for (int rep = 0; rep < kRepetitions; ++rep) {
    report.kernel_seconds = std::min(report.kernel_seconds, timed(LossKind::MeeKernel));
    report.matrix_seconds = std::min(report.matrix_seconds, timed(LossKind::MeeMatrix));
  }

  report.speedup = report.kernel_seconds / report.matrix_seconds;

  std::vector<double> cached_losses, naive_losses;
  train(arm(LossKind::MeeMatrix, cfg.epochs), data, &cached_losses);
  train(arm(LossKind::MeeMatrixNaive, cfg.epochs), data, &naive_losses);
  for (std::size_t i = 0; i < cached_losses.size(); ++i)
    report.max_step_divergence =
        std::max(report.max_step_divergence, std::abs(cached_losses[i] - naive_losses[i]));
  return report;
}

inline std::string benchmark_csv(const BenchmarkReport& r) {
  std::string csv = "batch_size,steps_per_epoch,epochs,kernel_seconds,matrix_seconds,speedup,max_step_divergence\n";
  csv += std::to_string(r.batch_size) + "," + std::to_string(r.steps_per_epoch) + "," +
         std::to_string(r.epochs_timed) + "," + detail::format_seconds(r.kernel_seconds) + "," +
         detail::format_seconds(r.matrix_seconds) + "," + detail::format_metric(r.speedup) + "," +
         detail::format_metric(r.max_step_divergence) + "\n";
  return csv;
}

// ---------------------------------------------------------------------------
// Suite runner: many configs, one output directory of CSVs and charts.

struct SuiteRun {
  std::string run_id;
  ExperimentConfig config;
  TrainingLog log;
  EvalReport final_eval;
  double total_seconds = 0.0;
  bool ok = false;
  std::string error;
};

struct SuiteResult {
  std::vector<SuiteRun> runs;
  std::filesystem::path out_dir;

  bool all_ok() const {
    for (const SuiteRun& r : runs)
      if (!r.ok) return false;
    return true;
  }
};

inline std::string compose_run_id(const ExperimentConfig& cfg, std::size_t index) {
  if (!cfg.run_id.empty()) return cfg.run_id;
  char buf[32];
  std::snprintf(buf, sizeof buf, "run%02zu", index);
  return std::string(buf) + "_" + to_string(cfg.loss) + "_" + to_string(cfg.channel.mode);
}

inline std::string summary_csv(const SuiteResult& result) {
  std::string csv = "run_id,loss,channel,snr_db,final_test_mae,final_med,total_seconds\n";
  for (const SuiteRun& run : result.runs) {
    if (!run.ok) continue;
    csv += run.run_id + "," + to_string(run.config.loss) + "," +
           to_string(run.config.channel.mode) + "," +
           detail::format_metric(run.config.channel.snr_db) + "," +
           detail::format_metric(run.final_eval.mae) + "," +
           detail::format_metric(run.final_eval.med) + "," +
           detail::format_seconds(run.total_seconds) + "\n";
  }
  return csv;
}

// Execute every run, write <run_id>.csv per run plus summary.csv, overlay
// loss curves per (use_case, channel) group, and bar-chart final MED values.
// A failing run is recorded and skipped, not fatal to its siblings.
inline SuiteResult run_suite(const std::vector<ExperimentConfig>& configs,
                             const std::string& out_dir) {
  SuiteResult result;
  result.out_dir = out_dir;
  if (configs.empty()) return result;
  std::filesystem::create_directories(result.out_dir);

  for (std::size_t i = 0; i < configs.size(); ++i) {
    SuiteRun run;
    run.config = configs[i];
    run.run_id = compose_run_id(run.config, i);
    try {
      run.config.validate();
      const DataBundle data = build_data(run.config);
      TrainOutcome outcome = train(run.config, data);

      ChannelConfig final_cfg = run.config.channel;
      final_cfg.seed = derive_seed(derive_seed(run.config.seed, run.config.channel.seed), 99);
      const Matrix test_rx = transmit(data.test_features, data.codec, final_cfg);
      run.final_eval = evaluate_med(outcome.net, test_rx, data.test_targets);
      run.log = std::move(outcome.log);
      run.total_seconds = outcome.total_seconds;
      run.ok = true;
      detail::atomic_write(result.out_dir / (run.run_id + ".csv"), training_csv(run.log));
    } catch (const Error& ex) {
      run.ok = false;
      run.error = ex.what();
    }
    result.runs.push_back(std::move(run));
  }

  detail::atomic_write(result.out_dir / "summary.csv", summary_csv(result));

  // Loss-curve overlays, grouped so only comparable runs share a chart.
  std::map<std::string, std::vector<Series>> groups;
  for (const SuiteRun& run : result.runs) {
    if (!run.ok) continue;
    std::string key = to_string(run.config.use_case) + "_" + to_string(run.config.channel.mode);
    if (run.config.channel.mode != ChannelMode::Ideal) {
      char snr[24];
      std::snprintf(snr, sizeof snr, "%gdb", run.config.channel.snr_db);
      key += std::string("_") + snr;
    }
    Series series;
    series.label = run.run_id;
    for (const EpochRecord& r : run.log.epochs) series.values.push_back(r.loss);
    groups[key].push_back(std::move(series));
  }
  for (const auto& [key, series] : groups)
    detail::atomic_write(result.out_dir / ("loss_" + key + ".svg"),
                         line_chart_svg("training loss: " + key, "epoch", "loss", series));

  std::vector<std::string> labels;
  std::vector<double> meds;
  for (const SuiteRun& run : result.runs) {
    if (!run.ok) continue;
    labels.push_back(run.run_id);
    meds.push_back(run.final_eval.med);
  }
  if (!labels.empty())
    detail::atomic_write(result.out_dir / "final_med.svg",
                         bar_chart_svg("final test mean error distance", labels, meds));
  return result;
}

}  // namespace mee
