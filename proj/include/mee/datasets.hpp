#pragma once

// Dataset ingestion and generation: numeric CSV loading, RSSI fingerprint
// preprocessing (sentinel replacement, sparse-column dropping, min-max
// normalization), train/test splitting, and two synthetic generators with
// known ground truth for controlled experiments.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mee/error.hpp"
#include "mee/matrix.hpp"
#include "mee/rng.hpp"

namespace mee {

struct TabularDataset {
  Matrix features;
  Matrix targets;
  std::vector<std::string> feature_names;
  std::vector<std::string> target_names;
};

struct LocalizationDataset {
  Matrix rssi;       // normalized to [0, 1]
  Matrix positions;  // N x 2
  std::size_t aps_before = 0;  // AP columns seen before dropping
  std::size_t aps_after = 0;   // AP columns retained
};

struct PreprocessSpec {
  std::string ap_prefix = "WAP";   // feature columns with this name prefix are APs
  double missing_sentinel = 100.0; // RSSI value that means "not heard"
  double floor_dbm = -110.0;       // sentinel replacement
  double drop_threshold = 0.98;    // drop APs missing in >= this fraction of rows
};

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t shuffle_seed = 0;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    const std::string_view raw(line.data() + start,
                               (comma == std::string::npos ? line.size() : comma) - start);
    fields.emplace_back(trim(raw));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

inline double parse_cell(const std::string& cell, std::size_t row, const std::string& column) {
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end)
    throw IngestError("csv row " + std::to_string(row) + ", column '" + column +
                      "': cannot parse '" + cell + "' as a number");
  return value;
}

}  // namespace detail

// Load a headered numeric CSV, splitting out the named target columns. Every
// remaining column becomes a feature. Unparseable cells and ragged rows are
// reported with their location.
inline TabularDataset load_csv(const std::string& path,
                               const std::vector<std::string>& target_columns) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open csv file '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw IngestError("csv file '" + path + "' is empty");
  const std::vector<std::string> header = detail::split_csv_line(line);

  std::vector<std::size_t> target_idx;
  for (const std::string& name : target_columns) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw IngestError("csv file '" + path + "' has no column named '" + name + "'");
    target_idx.push_back(static_cast<std::size_t>(it - header.begin()));
  }
  std::vector<bool> is_target(header.size(), false);
  for (std::size_t idx : target_idx) is_target[idx] = true;

  TabularDataset ds;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (!is_target[c]) ds.feature_names.push_back(header[c]);
  ds.target_names = target_columns;

  std::vector<double> feature_rows, target_rows;
  std::size_t rows = 0;
  std::size_t line_no = 1;  // header was line 1
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const std::vector<std::string> cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw IngestError("csv row " + std::to_string(line_no) + ": expected " +
                        std::to_string(header.size()) + " fields, got " +
                        std::to_string(cells.size()));
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const double v = detail::parse_cell(cells[c], line_no, header[c]);
      (is_target[c] ? target_rows : feature_rows).push_back(v);
    }
    // Keep target order as requested, not as laid out in the file.
    if (target_idx.size() > 1) {
      std::vector<double> reordered(target_idx.size());
      const std::size_t base = target_rows.size() - target_idx.size();
      std::vector<std::pair<std::size_t, std::size_t>> order;  // (file col, requested slot)
      for (std::size_t t = 0; t < target_idx.size(); ++t) order.emplace_back(target_idx[t], t);
      std::sort(order.begin(), order.end());
      for (std::size_t t = 0; t < order.size(); ++t)
        reordered[order[t].second] = target_rows[base + t];
      std::copy(reordered.begin(), reordered.end(), target_rows.begin() + base);
    }
    ++rows;
  }
  if (rows == 0) throw IngestError("csv file '" + path + "' has a header but no data rows");

  ds.features = Matrix(rows, ds.feature_names.size());
  std::copy(feature_rows.begin(), feature_rows.end(), ds.features.data().begin());
  ds.targets = Matrix(rows, target_columns.size());
  std::copy(target_rows.begin(), target_rows.end(), ds.targets.data().begin());
  return ds;
}

// Min-max normalize each column in place to [0, 1]; constant columns map to 0.
inline void minmax_normalize_columns(Matrix& m) {
  for (std::size_t c = 0; c < m.cols(); ++c) {
    double lo = m(0, c), hi = m(0, c);
    for (std::size_t r = 1; r < m.rows(); ++r) {
      lo = std::min(lo, m(r, c));
      hi = std::max(hi, m(r, c));
    }
    const double span = hi - lo;
    for (std::size_t r = 0; r < m.rows(); ++r)
      m(r, c) = span > 0.0 ? (m(r, c) - lo) / span : 0.0;
  }
}

// RSSI fingerprint preprocessing: select AP columns by name prefix, replace
// the "not heard" sentinel with a floor power, drop APs missing almost
// everywhere, then min-max normalize surviving columns and the coordinates.
inline LocalizationDataset preprocess_localization(const TabularDataset& raw,
                                                   const PreprocessSpec& spec) {
  if (raw.targets.cols() != 2)
    throw IngestError("localization preprocessing expects exactly 2 coordinate targets, got " +
                      std::to_string(raw.targets.cols()));

  std::vector<std::size_t> ap_cols;
  for (std::size_t c = 0; c < raw.feature_names.size(); ++c)
    if (raw.feature_names[c].rfind(spec.ap_prefix, 0) == 0) ap_cols.push_back(c);
  if (ap_cols.empty())
    throw IngestError("no AP columns found with prefix '" + spec.ap_prefix + "'");

  const std::size_t rows = raw.features.rows();
  std::vector<std::size_t> kept;
  for (std::size_t c : ap_cols) {
    std::size_t missing = 0;
    for (std::size_t r = 0; r < rows; ++r)
      if (raw.features(r, c) == spec.missing_sentinel) ++missing;
    const double fraction = static_cast<double>(missing) / static_cast<double>(rows);
    if (fraction < spec.drop_threshold) kept.push_back(c);
  }
  if (kept.empty())
    throw IngestError("preprocessing dropped every AP column (threshold " +
                      std::to_string(spec.drop_threshold) + ")");

  LocalizationDataset out;
  out.aps_before = ap_cols.size();
  out.aps_after = kept.size();
  out.rssi = Matrix(rows, kept.size());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t k = 0; k < kept.size(); ++k) {
      const double v = raw.features(r, kept[k]);
      out.rssi(r, k) = (v == spec.missing_sentinel) ? spec.floor_dbm : v;
    }
  minmax_normalize_columns(out.rssi);

  out.positions = raw.targets;
  minmax_normalize_columns(out.positions);
  return out;
}

namespace detail {

inline void check_split_fraction(double fraction, std::size_t rows) {
  if (!(fraction > 0.0) || !(fraction < 1.0))
    throw ConfigError("split: train fraction must lie strictly between 0 and 1");
  const auto train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(rows)));
  if (train == 0 || train == rows)
    throw ConfigError("split: fraction " + std::to_string(fraction) + " leaves an empty side for " +
                      std::to_string(rows) + " rows");
}

inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t rows, const SplitSpec& spec) {
  check_split_fraction(spec.train_fraction, rows);
  const auto train =
      static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(rows)));
  std::vector<std::size_t> idx = shuffled_indices(rows, spec.shuffle_seed);
  std::vector<std::size_t> head(idx.begin(), idx.begin() + train);
  std::vector<std::size_t> tail(idx.begin() + train, idx.end());
  return {std::move(head), std::move(tail)};
}

}  // namespace detail

// Shuffled train/test split; row count of train side is round(fraction * N).
inline std::pair<TabularDataset, TabularDataset> split(const TabularDataset& ds,
                                                       const SplitSpec& spec) {
  const auto [train_idx, test_idx] = detail::split_indices(ds.features.rows(), spec);
  TabularDataset train{take_rows(ds.features, train_idx), take_rows(ds.targets, train_idx),
                       ds.feature_names, ds.target_names};
  TabularDataset test{take_rows(ds.features, test_idx), take_rows(ds.targets, test_idx),
                      ds.feature_names, ds.target_names};
  return {std::move(train), std::move(test)};
}

inline std::pair<LocalizationDataset, LocalizationDataset> split(const LocalizationDataset& ds,
                                                                 const SplitSpec& spec) {
  const auto [train_idx, test_idx] = detail::split_indices(ds.rssi.rows(), spec);
  LocalizationDataset train{take_rows(ds.rssi, train_idx), take_rows(ds.positions, train_idx),
                            ds.aps_before, ds.aps_after};
  LocalizationDataset test{take_rows(ds.rssi, test_idx), take_rows(ds.positions, test_idx),
                           ds.aps_before, ds.aps_after};
  return {std::move(train), std::move(test)};
}

// ---------------------------------------------------------------------------
// Synthetic regression: 5 standard-normal features, a fixed sparse linear
// rule with a mild nonlinearity, Gaussian target noise, and an exact number
// of impulsive outlier rows whose noise is 10x wider.

inline constexpr std::size_t kSynthRegressionFeatures = 5;
inline constexpr double kSynthRegressionNoiseStd = 0.5;
inline constexpr double kSynthRegressionOutlierScale = 10.0;

inline double synth_regression_clean_target(const double* x) {
  return 2.0 * x[0] - 1.5 * x[2] + 0.8 * x[3] + 0.5 * std::sin(2.0 * x[1]);
}

inline TabularDataset synth_regression(std::size_t n, double outlier_fraction,
                                       std::uint64_t seed,
                                       std::vector<std::uint8_t>* outlier_mask = nullptr) {
  if (n < 2) throw ConfigError("synth_regression: need at least 2 samples");
  if (outlier_fraction < 0.0 || outlier_fraction > 1.0)
    throw ConfigError("synth_regression: outlier fraction must lie in [0, 1]");

  TabularDataset ds;
  ds.feature_names = {"x0", "x1", "x2", "x3", "x4"};
  ds.target_names = {"y"};
  ds.features = Matrix(n, kSynthRegressionFeatures);
  ds.targets = Matrix(n, 1);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  for (double& v : ds.features.data()) v = unit(rng);
  for (std::size_t i = 0; i < n; ++i)
    ds.targets(i, 0) = synth_regression_clean_target(ds.features.row(i)) +
                       kSynthRegressionNoiseStd * unit(rng);

  const auto n_outliers =
      static_cast<std::size_t>(std::llround(outlier_fraction * static_cast<double>(n)));
  if (outlier_mask) outlier_mask->assign(n, 0);
  if (n_outliers > 0) {
    const std::vector<std::size_t> order = shuffled_indices(n, derive_seed(seed, 7));
    for (std::size_t k = 0; k < n_outliers; ++k) {
      const std::size_t row = order[k];
      ds.targets(row, 0) += kSynthRegressionOutlierScale * kSynthRegressionNoiseStd * unit(rng);
      if (outlier_mask) (*outlier_mask)[row] = 1;
    }
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Synthetic indoor localization: APs on a grid over the unit square, users
// uniform, log-distance path loss with log-normal shadowing. RSSI values are
// min-max normalized globally (one shared scale across APs); positions are
// already in [0, 1]^2.

inline constexpr double kSynthLocalizationP0Dbm = 30.0;
inline constexpr double kSynthLocalizationPathLossExp = 2.2;
inline constexpr double kSynthLocalizationMinDistance = 1e-3;

inline double log_distance_rssi(double distance, double p0_dbm = kSynthLocalizationP0Dbm,
                                double path_loss_exp = kSynthLocalizationPathLossExp) {
  const double d = std::max(distance, kSynthLocalizationMinDistance);
  return -p0_dbm - 10.0 * path_loss_exp * std::log10(d);
}

// First n points of the smallest square lattice covering n, centered in cells.
inline std::vector<std::array<double, 2>> ap_grid(std::size_t n_aps) {
  if (n_aps == 0) throw ConfigError("ap_grid: need at least one AP");
  const auto side = static_cast<std::size_t>(
      std::ceil(std::sqrt(static_cast<double>(n_aps))));
  std::vector<std::array<double, 2>> grid;
  for (std::size_t gy = 0; gy < side && grid.size() < n_aps; ++gy)
    for (std::size_t gx = 0; gx < side && grid.size() < n_aps; ++gx)
      grid.push_back({(static_cast<double>(gx) + 0.5) / static_cast<double>(side),
                      (static_cast<double>(gy) + 0.5) / static_cast<double>(side)});
  return grid;
}

inline LocalizationDataset synth_localization(std::size_t n_users, std::size_t n_aps,
                                              std::uint64_t seed,
                                              double shadow_sigma_db = 2.0) {
  if (n_users < 2) throw ConfigError("synth_localization: need at least 2 users");
  if (shadow_sigma_db < 0.0) throw ConfigError("synth_localization: negative shadowing sigma");

  const std::vector<std::array<double, 2>> aps = ap_grid(n_aps);
  LocalizationDataset ds;
  ds.aps_before = n_aps;
  ds.aps_after = n_aps;
  ds.positions = Matrix(n_users, 2);
  ds.rssi = Matrix(n_users, n_aps);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> shadow(0.0, shadow_sigma_db > 0.0 ? shadow_sigma_db : 1.0);
  for (std::size_t u = 0; u < n_users; ++u) {
    const double ux = unit(rng);
    const double uy = unit(rng);
    ds.positions(u, 0) = ux;
    ds.positions(u, 1) = uy;
    for (std::size_t a = 0; a < n_aps; ++a) {
      const double dist = std::hypot(ux - aps[a][0], uy - aps[a][1]);
      const double fading = shadow_sigma_db > 0.0 ? shadow(rng) : 0.0;
      ds.rssi(u, a) = log_distance_rssi(dist) + fading;
    }
  }

  // Global min-max: one scale shared by all APs, preserving relative powers.
  double lo = ds.rssi(0, 0), hi = ds.rssi(0, 0);
  for (double v : ds.rssi.data()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double span = hi - lo;
  for (double& v : ds.rssi.data()) v = span > 0.0 ? (v - lo) / span : 0.0;
  return ds;
}

}  // namespace mee
