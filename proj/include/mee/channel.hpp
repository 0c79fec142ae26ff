#pragma once

// Feature transmission over a simulated wireless link. Each scalar feature is
// quantized to 8 bits, Gray-mapped onto one 256-QAM symbol (4 bits per axis),
// pushed through y = h x + n, demapped to the nearest constellation point and
// dequantized. Modes: ideal (h = 1, n = 0), AWGN (h = 1), flat Rayleigh
// fading with perfect-CSI zero forcing (y / h).

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mee/error.hpp"
#include "mee/matrix.hpp"

namespace mee {

enum class ChannelMode { Ideal, Awgn, Rayleigh };

struct ChannelConfig {
  ChannelMode mode = ChannelMode::Ideal;
  double snr_db = 5.0;
  std::uint64_t seed = 0;
};

// Noise power for a target SNR: sigma^2 = P / 10^(snr/10).
inline double noise_power_from_snr(double snr_db, double signal_power) {
  if (!(signal_power > 0.0)) throw ConfigError("noise_power_from_snr: signal power must be > 0");
  return signal_power / std::pow(10.0, snr_db / 10.0);
}

// Circularly-symmetric complex Gaussian with E|z|^2 = variance; both channel
// noise and Rayleigh coefficients are drawn through this helper.
template <class Rng>
std::complex<double> circular_gaussian(Rng& rng, double variance) {
  std::normal_distribution<double> axis(0.0, std::sqrt(variance * 0.5));
  const double re = axis(rng);
  const double im = axis(rng);
  return {re, im};
}

// Square 256-QAM with Gray labelling per axis. The 16 PAM levels are
// (2i - 15) / sqrt(170), i = 0..15, which makes the constellation's average
// symbol energy exactly 1. A byte splits as high nibble -> in-phase label,
// low nibble -> quadrature label.
class Constellation {
 public:
  static constexpr std::size_t kOrder = 256;
  static constexpr std::size_t kLevels = 16;

  static Constellation qam256() { return Constellation(); }

  static std::uint8_t gray_encode(std::uint8_t index) {
    return static_cast<std::uint8_t>(index ^ (index >> 1));
  }

  // Prefix-xor inverse of the reflected Gray code.
  static std::uint8_t gray_decode(std::uint8_t gray) {
    std::uint8_t index = gray;
    index ^= static_cast<std::uint8_t>(index >> 1);
    index ^= static_cast<std::uint8_t>(index >> 2);
    index ^= static_cast<std::uint8_t>(index >> 4);
    return index;
  }

  double scale() const { return scale_; }

  double pam_level(std::size_t index) const {
    return (2.0 * static_cast<double>(index) - 15.0) * scale_;
  }

  std::complex<double> map(std::uint8_t symbol) const { return points_[symbol]; }

  // Nearest constellation point; in a square grid that is the nearest PAM
  // level on each axis independently.
  std::uint8_t demap(std::complex<double> received) const {
    const std::size_t i = nearest_level(received.real());
    const std::size_t q = nearest_level(received.imag());
    return static_cast<std::uint8_t>((gray_encode(static_cast<std::uint8_t>(i)) << 4) |
                                     gray_encode(static_cast<std::uint8_t>(q)));
  }

 private:
  Constellation() : scale_(1.0 / std::sqrt(170.0)) {
    for (std::size_t b = 0; b < kOrder; ++b) {
      const std::uint8_t hi = static_cast<std::uint8_t>(b >> 4);
      const std::uint8_t lo = static_cast<std::uint8_t>(b & 0x0f);
      points_[b] = {pam_level(gray_decode(hi)), pam_level(gray_decode(lo))};
    }
  }

  std::size_t nearest_level(double axis_value) const {
    const double idx = std::round((axis_value / scale_ + 15.0) / 2.0);
    if (idx < 0.0) return 0;
    if (idx > 15.0) return 15;
    return static_cast<std::size_t>(idx);
  }

  double scale_;
  std::array<std::complex<double>, kOrder> points_;
};

// Per-feature uniform 8-bit quantizer calibrated from training data.
// Out-of-range values are clipped to the calibration interval.
class FeatureCodec {
 public:
  static constexpr std::size_t kLevels = 256;

  static FeatureCodec fit(const Matrix& features) {
    if (features.rows() == 0 || features.cols() == 0)
      throw IngestError("feature codec: nothing to calibrate on");
    if (!all_finite(features)) throw IngestError("feature codec: non-finite feature");
    std::vector<double> mins(features.cols()), maxs(features.cols());
    for (std::size_t c = 0; c < features.cols(); ++c) {
      double lo = features(0, c), hi = features(0, c);
      for (std::size_t r = 1; r < features.rows(); ++r) {
        lo = std::min(lo, features(r, c));
        hi = std::max(hi, features(r, c));
      }
      if (lo == hi) {  // constant column: widen so the codec stays invertible
        lo -= 0.5;
        hi += 0.5;
      }
      mins[c] = lo;
      maxs[c] = hi;
    }
    return FeatureCodec(std::move(mins), std::move(maxs));
  }

  FeatureCodec(std::vector<double> mins, std::vector<double> maxs)
      : mins_(std::move(mins)), maxs_(std::move(maxs)) {
    if (mins_.size() != maxs_.size() || mins_.empty())
      throw ConfigError("feature codec: calibration vectors mismatch");
    for (std::size_t c = 0; c < mins_.size(); ++c)
      if (!(mins_[c] < maxs_[c]))
        throw ConfigError("feature codec: min >= max for feature " + std::to_string(c));
  }

  std::size_t feature_count() const { return mins_.size(); }
  double min(std::size_t col) const { return mins_[col]; }
  double max(std::size_t col) const { return maxs_[col]; }
  double step(std::size_t col) const {
    return (maxs_[col] - mins_[col]) / static_cast<double>(kLevels - 1);
  }

  std::uint8_t quantize(double value, std::size_t col) const {
    const double clipped = std::min(std::max(value, mins_[col]), maxs_[col]);
    const double t = (clipped - mins_[col]) / step(col);
    const double q = std::round(t);
    return static_cast<std::uint8_t>(q < 0.0 ? 0.0 : (q > 255.0 ? 255.0 : q));
  }

  double dequantize(std::uint8_t level, std::size_t col) const {
    return mins_[col] + static_cast<double>(level) * step(col);
  }

 private:
  std::vector<double> mins_, maxs_;
};

// Apply the configured channel to a stream of unit-power symbols. For
// Rayleigh, the fading coefficient is drawn first, then the noise, and the
// receiver zero-forces with perfect CSI: y = (h x + n) / h = x + n / h.
inline std::vector<std::complex<double>> channel_apply(
    const std::vector<std::complex<double>>& symbols, const ChannelConfig& config) {
  std::vector<std::complex<double>> out(symbols.size());
  if (config.mode == ChannelMode::Ideal) {
    out = symbols;
    return out;
  }
  const double noise_power = noise_power_from_snr(config.snr_db, 1.0);
  std::mt19937_64 rng(config.seed);
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (config.mode == ChannelMode::Awgn) {
      out[i] = symbols[i] + circular_gaussian(rng, noise_power);
    } else {
      const std::complex<double> h = circular_gaussian(rng, 1.0);
      const std::complex<double> n = circular_gaussian(rng, noise_power);
      out[i] = symbols[i] + n / h;
    }
  }
  return out;
}

// Quantize -> modulate -> channel -> demap -> dequantize, element by element
// in row-major order. Ideal mode reduces exactly to quantize-dequantize.
inline Matrix transmit(const Matrix& features, const FeatureCodec& codec,
                       const ChannelConfig& config) {
  if (features.cols() != codec.feature_count())
    throw ShapeError("transmit: feature count does not match codec");
  if (!all_finite(features)) throw IngestError("transmit: non-finite feature value");

  static const Constellation constellation = Constellation::qam256();

  std::vector<std::complex<double>> symbols(features.size());
  for (std::size_t r = 0; r < features.rows(); ++r)
    for (std::size_t c = 0; c < features.cols(); ++c)
      symbols[r * features.cols() + c] = constellation.map(codec.quantize(features(r, c), c));

  const std::vector<std::complex<double>> received = channel_apply(symbols, config);

  Matrix out(features.rows(), features.cols());
  for (std::size_t r = 0; r < features.rows(); ++r)
    for (std::size_t c = 0; c < features.cols(); ++c)
      out(r, c) = codec.dequantize(constellation.demap(received[r * features.cols() + c]), c);
  return out;
}

inline ChannelMode channel_mode_from_string(const std::string& name) {
  if (name == "ideal") return ChannelMode::Ideal;
  if (name == "awgn") return ChannelMode::Awgn;
  if (name == "rayleigh") return ChannelMode::Rayleigh;
  throw ConfigError("unknown channel mode '" + name + "' (expected ideal|awgn|rayleigh)");
}

inline std::string to_string(ChannelMode mode) {
  switch (mode) {
    case ChannelMode::Ideal: return "ideal";
    case ChannelMode::Awgn: return "awgn";
    case ChannelMode::Rayleigh: return "rayleigh";
  }
  throw ConfigError("unknown channel mode value");
}

}  // namespace mee
