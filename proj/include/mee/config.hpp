#pragma once

// Experiment configuration: the knobs of one training run, JSON-serializable.
// Field names in JSON mirror the struct members exactly. Defaults follow the
// two built-in use-case presets (regression vs localization), so a config
// file only needs to state what differs.

#include <cstdint>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "mee/channel.hpp"
#include "mee/error.hpp"

namespace mee {

enum class UseCase { Regression, Localization, SyntheticRegression, SyntheticLocalization };

enum class LossKind {
  MeeMatrix,
  MeeKernel,
  Mse,
  Mae,
  // Naive re-evaluation of the matrix loss; reachable programmatically for
  // benchmarking and agreement checks, not via config strings.
  MeeMatrixNaive,
};

inline UseCase use_case_from_string(const std::string& name) {
  if (name == "regression") return UseCase::Regression;
  if (name == "localization") return UseCase::Localization;
  if (name == "synthetic-regression") return UseCase::SyntheticRegression;
  if (name == "synthetic-localization") return UseCase::SyntheticLocalization;
  throw ConfigError("unknown use_case '" + name +
                    "' (expected regression|localization|synthetic-regression|synthetic-localization)");
}

inline std::string to_string(UseCase uc) {
  switch (uc) {
    case UseCase::Regression: return "regression";
    case UseCase::Localization: return "localization";
    case UseCase::SyntheticRegression: return "synthetic-regression";
    case UseCase::SyntheticLocalization: return "synthetic-localization";
  }
  throw ConfigError("unknown use_case value");
}

inline LossKind loss_from_string(const std::string& name) {
  if (name == "mee-matrix") return LossKind::MeeMatrix;
  if (name == "mee-kernel") return LossKind::MeeKernel;
  if (name == "mse") return LossKind::Mse;
  if (name == "mae") return LossKind::Mae;
  throw ConfigError("unknown loss '" + name + "' (expected mee-matrix|mee-kernel|mse|mae)");
}

inline std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::MeeMatrix: return "mee-matrix";
    case LossKind::MeeKernel: return "mee-kernel";
    case LossKind::Mse: return "mse";
    case LossKind::Mae: return "mae";
    case LossKind::MeeMatrixNaive: return "mee-matrix-naive";
  }
  throw ConfigError("unknown loss value");
}

inline bool is_mee(LossKind kind) {
  return kind == LossKind::MeeMatrix || kind == LossKind::MeeKernel ||
         kind == LossKind::MeeMatrixNaive;
}

// Where the data comes from: a CSV on disk for the real use cases, generator
// knobs for the synthetic ones.
struct DataConfig {
  std::string csv_path;
  std::vector<std::string> target_columns = {"y"};        // regression CSV
  std::vector<std::string> coordinate_columns = {"LONGITUDE", "LATITUDE"};
  std::string ap_prefix = "WAP";
  double missing_sentinel = 100.0;
  double floor_dbm = -110.0;
  double drop_threshold = 0.98;
  std::size_t synth_samples = 2000;      // synthetic regression
  double outlier_fraction = 0.1;
  std::size_t synth_users = 1000;        // synthetic localization
  std::size_t synth_aps = 25;
  double shadow_sigma_db = 2.0;
};

struct ExperimentConfig {
  std::string run_id;  // optional; composed from the knobs when empty
  UseCase use_case = UseCase::SyntheticRegression;
  LossKind loss = LossKind::MeeMatrix;
  ChannelConfig channel{ChannelMode::Ideal, 5.0, 0};
  // Hidden and output widths; the input width always comes from the data.
  std::vector<std::size_t> layer_sizes = {20, 30, 1};
  std::size_t epochs = 300;
  std::size_t batch_size = 32;
  double learning_rate = 5e-4;
  std::uint64_t seed = 1;
  double train_fraction = 0.8;
  // Metric cadence: evaluate train/test metrics every k epochs (and always on
  // the last); 0 = last epoch only.
  std::size_t eval_every = 1;
  bool paper_literal_sign = false;
  bool abs_residual = false;
  bool calibrate_bias = true;
  DataConfig data;

  void validate() const {
    if (epochs < 1) throw ConfigError("config: epochs must be >= 1");
    if (batch_size < 2) throw ConfigError("config: batch_size must be >= 2 (entropy needs pairs)");
    if (!(learning_rate > 0.0)) throw ConfigError("config: learning_rate must be > 0");
    if (layer_sizes.empty()) throw ConfigError("config: layer_sizes must not be empty");
    for (std::size_t s : layer_sizes)
      if (s == 0) throw ConfigError("config: zero width in layer_sizes");
    if (!(train_fraction > 0.0) || !(train_fraction < 1.0))
      throw ConfigError("config: train_fraction must lie strictly between 0 and 1");
    if (data.outlier_fraction < 0.0 || data.outlier_fraction > 1.0)
      throw ConfigError("config: outlier_fraction must lie in [0, 1]");
  }
};

// Preset defaults per use case (network shape, schedule, learning rate).
inline ExperimentConfig regression_defaults() {
  ExperimentConfig cfg;
  cfg.use_case = UseCase::SyntheticRegression;
  cfg.layer_sizes = {20, 30, 1};
  cfg.epochs = 300;
  cfg.batch_size = 32;
  cfg.learning_rate = 5e-4;
  return cfg;
}

inline ExperimentConfig localization_defaults() {
  ExperimentConfig cfg;
  cfg.use_case = UseCase::SyntheticLocalization;
  cfg.layer_sizes = {128, 64, 2};
  cfg.epochs = 500;
  cfg.batch_size = 32;
  cfg.learning_rate = 5e-5;
  return cfg;
}

namespace detail {

using json = nlohmann::json;

inline void reject_unknown_keys(const json& obj, const std::set<std::string>& known,
                                const std::string& where) {
  for (const auto& [key, value] : obj.items())
    if (!known.count(key))
      throw ConfigError("config: unknown key '" + key + "' in " + where);
}

inline void apply_data_json(DataConfig& data, const json& j) {
  reject_unknown_keys(j,
                      {"csv_path", "target_columns", "coordinate_columns", "ap_prefix",
                       "missing_sentinel", "floor_dbm", "drop_threshold", "synth_samples",
                       "outlier_fraction", "synth_users", "synth_aps", "shadow_sigma_db"},
                      "data");
  if (j.contains("csv_path")) data.csv_path = j["csv_path"].get<std::string>();
  if (j.contains("target_columns"))
    data.target_columns = j["target_columns"].get<std::vector<std::string>>();
  if (j.contains("coordinate_columns"))
    data.coordinate_columns = j["coordinate_columns"].get<std::vector<std::string>>();
  if (j.contains("ap_prefix")) data.ap_prefix = j["ap_prefix"].get<std::string>();
  if (j.contains("missing_sentinel")) data.missing_sentinel = j["missing_sentinel"].get<double>();
  if (j.contains("floor_dbm")) data.floor_dbm = j["floor_dbm"].get<double>();
  if (j.contains("drop_threshold")) data.drop_threshold = j["drop_threshold"].get<double>();
  if (j.contains("synth_samples")) data.synth_samples = j["synth_samples"].get<std::size_t>();
  if (j.contains("outlier_fraction")) data.outlier_fraction = j["outlier_fraction"].get<double>();
  if (j.contains("synth_users")) data.synth_users = j["synth_users"].get<std::size_t>();
  if (j.contains("synth_aps")) data.synth_aps = j["synth_aps"].get<std::size_t>();
  if (j.contains("shadow_sigma_db")) data.shadow_sigma_db = j["shadow_sigma_db"].get<double>();
}

inline void apply_channel_json(ChannelConfig& channel, const json& j) {
  reject_unknown_keys(j, {"mode", "snr_db", "seed"}, "channel");
  if (j.contains("mode")) channel.mode = channel_mode_from_string(j["mode"].get<std::string>());
  if (j.contains("snr_db")) channel.snr_db = j["snr_db"].get<double>();
  if (j.contains("seed")) channel.seed = j["seed"].get<std::uint64_t>();
}

inline void apply_experiment_json(ExperimentConfig& cfg, const json& j) {
  reject_unknown_keys(j,
                      {"run_id", "use_case", "loss", "channel", "layer_sizes", "epochs",
                       "batch_size", "learning_rate", "seed", "train_fraction", "eval_every",
                       "paper_literal_sign", "abs_residual", "calibrate_bias", "data"},
                      "experiment config");
  if (j.contains("run_id")) cfg.run_id = j["run_id"].get<std::string>();
  if (j.contains("loss")) cfg.loss = loss_from_string(j["loss"].get<std::string>());
  if (j.contains("channel")) apply_channel_json(cfg.channel, j["channel"]);
  if (j.contains("layer_sizes"))
    cfg.layer_sizes = j["layer_sizes"].get<std::vector<std::size_t>>();
  if (j.contains("epochs")) cfg.epochs = j["epochs"].get<std::size_t>();
  if (j.contains("batch_size")) cfg.batch_size = j["batch_size"].get<std::size_t>();
  if (j.contains("learning_rate")) cfg.learning_rate = j["learning_rate"].get<double>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("train_fraction")) cfg.train_fraction = j["train_fraction"].get<double>();
  if (j.contains("eval_every")) cfg.eval_every = j["eval_every"].get<std::size_t>();
  if (j.contains("paper_literal_sign")) cfg.paper_literal_sign = j["paper_literal_sign"].get<bool>();
  if (j.contains("abs_residual")) cfg.abs_residual = j["abs_residual"].get<bool>();
  if (j.contains("calibrate_bias")) cfg.calibrate_bias = j["calibrate_bias"].get<bool>();
  if (j.contains("data")) apply_data_json(cfg.data, j["data"]);
}

// The use case decides which preset supplies defaults, so read it first.
inline ExperimentConfig experiment_from_json(const json& j, const json* base = nullptr) {
  UseCase uc = UseCase::SyntheticRegression;
  if (base && base->contains("use_case"))
    uc = use_case_from_string((*base)["use_case"].get<std::string>());
  if (j.contains("use_case")) uc = use_case_from_string(j["use_case"].get<std::string>());

  ExperimentConfig cfg = (uc == UseCase::Localization || uc == UseCase::SyntheticLocalization)
                             ? localization_defaults()
                             : regression_defaults();
  cfg.use_case = uc;
  if (base) apply_experiment_json(cfg, *base);
  apply_experiment_json(cfg, j);
  cfg.use_case = uc;  // presets must not override an explicit use case
  return cfg;
}

}  // namespace detail

inline nlohmann::json to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  if (!cfg.run_id.empty()) j["run_id"] = cfg.run_id;
  j["use_case"] = to_string(cfg.use_case);
  j["loss"] = to_string(cfg.loss);
  j["channel"] = {{"mode", to_string(cfg.channel.mode)},
                  {"snr_db", cfg.channel.snr_db},
                  {"seed", cfg.channel.seed}};
  j["layer_sizes"] = cfg.layer_sizes;
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  j["learning_rate"] = cfg.learning_rate;
  j["seed"] = cfg.seed;
  j["train_fraction"] = cfg.train_fraction;
  j["eval_every"] = cfg.eval_every;
  j["paper_literal_sign"] = cfg.paper_literal_sign;
  j["abs_residual"] = cfg.abs_residual;
  j["calibrate_bias"] = cfg.calibrate_bias;
  j["data"] = {{"csv_path", cfg.data.csv_path},
               {"target_columns", cfg.data.target_columns},
               {"coordinate_columns", cfg.data.coordinate_columns},
               {"ap_prefix", cfg.data.ap_prefix},
               {"missing_sentinel", cfg.data.missing_sentinel},
               {"floor_dbm", cfg.data.floor_dbm},
               {"drop_threshold", cfg.data.drop_threshold},
               {"synth_samples", cfg.data.synth_samples},
               {"outlier_fraction", cfg.data.outlier_fraction},
               {"synth_users", cfg.data.synth_users},
               {"synth_aps", cfg.data.synth_aps},
               {"shadow_sigma_db", cfg.data.shadow_sigma_db}};
  return j;
}

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg = detail::experiment_from_json(j);
  cfg.validate();
  return cfg;
}

inline nlohmann::json parse_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& ex) {
    throw ConfigError("config file '" + path + "': " + ex.what());
  }
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  return experiment_config_from_json(parse_json_file(path));
}

// A suite file is either a bare array of experiment objects or an object
// with optional "base" (shared defaults) and "output_dir", plus "runs".
struct SuiteFile {
  std::string output_dir;
  std::vector<ExperimentConfig> runs;
};

inline SuiteFile load_suite_config(const std::string& path) {
  const nlohmann::json j = parse_json_file(path);
  SuiteFile suite;
  const nlohmann::json* base = nullptr;
  const nlohmann::json* runs = nullptr;
  if (j.is_array()) {
    runs = &j;
  } else {
    detail::reject_unknown_keys(j, {"base", "output_dir", "runs"}, "suite file");
    if (j.contains("output_dir")) suite.output_dir = j["output_dir"].get<std::string>();
    if (j.contains("base")) base = &j["base"];
    if (!j.contains("runs")) throw ConfigError("suite file: missing 'runs' array");
    runs = &j["runs"];
  }
  if (!runs->is_array()) throw ConfigError("suite file: 'runs' must be an array");
  for (const nlohmann::json& run : *runs) {
    ExperimentConfig cfg = detail::experiment_from_json(run, base);
    cfg.validate();
    suite.runs.push_back(std::move(cfg));
  }
  return suite;
}

}  // namespace mee
