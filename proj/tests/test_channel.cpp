#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <random>

#include "mee/channel.hpp"
#include "testing_util.hpp"

using Catch::Approx;
using mee::ChannelConfig;
using mee::ChannelMode;
using mee::Constellation;
using mee::FeatureCodec;
using mee::Matrix;

namespace reference {

// Independent 16-PAM-per-axis model of the same link, written from the
// definition rather than reusing library internals: random bytes, Gray
// mapping, additive complex Gaussian noise, per-axis threshold detection.
double monte_carlo_ser(double snr_db, std::size_t trials, std::uint64_t seed) {
  const double scale = 1.0 / std::sqrt(170.0);
  const double noise_power = std::pow(10.0, -snr_db / 10.0);  // unit signal power
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> byte(0, 255);
  std::normal_distribution<double> axis_noise(0.0, std::sqrt(noise_power / 2.0));

  auto gray = [](int i) { return i ^ (i >> 1); };
  std::array<int, 16> gray_to_index{};
  for (int i = 0; i < 16; ++i) gray_to_index[gray(i)] = i;

  std::size_t errors = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const int b = byte(rng);
    const int i_idx = gray_to_index[(b >> 4) & 0xf];
    const int q_idx = gray_to_index[b & 0xf];
    const double tx_i = (2.0 * i_idx - 15.0) * scale;
    const double tx_q = (2.0 * q_idx - 15.0) * scale;
    const double rx_i = tx_i + axis_noise(rng);
    const double rx_q = tx_q + axis_noise(rng);
    const int hat_i = std::clamp(static_cast<int>(std::lround((rx_i / scale + 15.0) / 2.0)), 0, 15);
    const int hat_q = std::clamp(static_cast<int>(std::lround((rx_q / scale + 15.0) / 2.0)), 0, 15);
    if (hat_i != i_idx || hat_q != q_idx) ++errors;
  }
  return static_cast<double>(errors) / static_cast<double>(trials);
}

}  // namespace reference

TEST_CASE("256-qam constellation") {
  const Constellation c = Constellation::qam256();

  SECTION("unit average energy and corner point") {
    double energy = 0.0;
    double max_mag = 0.0;
    for (std::size_t b = 0; b < Constellation::kOrder; ++b) {
      const auto p = c.map(static_cast<std::uint8_t>(b));
      energy += std::norm(p);
      max_mag = std::max(max_mag, std::norm(p));
    }
    CHECK(energy / 256.0 == Approx(1.0).epsilon(1e-12));
    CHECK(max_mag == Approx(450.0 / 170.0).epsilon(1e-12));  // (15^2 + 15^2) / 170
  }

  SECTION("map/demap round-trips every byte") {
    for (std::size_t b = 0; b < Constellation::kOrder; ++b)
      CHECK(c.demap(c.map(static_cast<std::uint8_t>(b))) == b);
  }

  SECTION("axis neighbors differ in exactly one bit (Gray property)") {
    for (int i = 0; i + 1 < 16; ++i) {
      const int diff = Constellation::gray_encode(static_cast<std::uint8_t>(i)) ^
                       Constellation::gray_encode(static_cast<std::uint8_t>(i + 1));
      CHECK(std::popcount(static_cast<unsigned>(diff)) == 1);
    }
  }

  SECTION("demap clamps points outside the grid") {
    const std::complex<double> far{10.0, -10.0};
    const std::uint8_t b = c.demap(far);
    const auto p = c.map(b);
    CHECK(p.real() == Approx(15.0 / std::sqrt(170.0)));
    CHECK(p.imag() == Approx(-15.0 / std::sqrt(170.0)));
  }
}

TEST_CASE("noise power from snr") {
  CHECK(mee::noise_power_from_snr(5.0, 1.0) == Approx(0.31622776601683794).epsilon(1e-14));
  CHECK(mee::noise_power_from_snr(0.0, 2.0) == Approx(2.0).epsilon(1e-14));
  CHECK(mee::noise_power_from_snr(10.0, 2.0) == Approx(0.2).epsilon(1e-14));
  CHECK_THROWS_AS(mee::noise_power_from_snr(5.0, 0.0), mee::ConfigError);
}

TEST_CASE("feature codec") {
  const Matrix data = Matrix::from_rows({{0.0, -4.0}, {1.0, 6.0}, {0.25, 1.0}});
  const FeatureCodec codec = FeatureCodec::fit(data);

  SECTION("calibration picks column extrema") {
    CHECK(codec.min(0) == 0.0);
    CHECK(codec.max(0) == 1.0);
    CHECK(codec.min(1) == -4.0);
    CHECK(codec.max(1) == 6.0);
  }

  SECTION("round-trip error bounded by half a step") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u0(0.0, 1.0), u1(-4.0, 6.0);
    for (int rep = 0; rep < 2000; ++rep) {
      const double x0 = u0(rng), x1 = u1(rng);
      CHECK(std::abs(codec.dequantize(codec.quantize(x0, 0), 0) - x0) <= codec.step(0) / 2 + 1e-15);
      CHECK(std::abs(codec.dequantize(codec.quantize(x1, 1), 1) - x1) <= codec.step(1) / 2 + 1e-15);
    }
  }

  SECTION("extremes hit the end levels and out-of-range clips") {
    CHECK(codec.quantize(0.0, 0) == 0);
    CHECK(codec.quantize(1.0, 0) == 255);
    CHECK(codec.quantize(-7.0, 1) == 0);
    CHECK(codec.quantize(99.0, 1) == 255);
  }

  SECTION("constant columns are widened, not degenerate") {
    const FeatureCodec flat = FeatureCodec::fit(Matrix(4, 1, 2.0));
    CHECK(flat.min(0) < flat.max(0));
    CHECK(flat.dequantize(flat.quantize(2.0, 0), 0) == Approx(2.0).margin(flat.step(0) / 2));
  }

  SECTION("bad calibration throws") {
    CHECK_THROWS_AS(FeatureCodec({1.0}, {0.5}), mee::ConfigError);
    Matrix nan_col(2, 1);
    nan_col(0, 0) = std::nan("");
    CHECK_THROWS_AS(FeatureCodec::fit(nan_col), mee::IngestError);
  }
}

TEST_CASE("ideal transmission is exactly quantize-dequantize") {
  std::mt19937_64 rng(11);
  const Matrix features = testutil::random_batch(rng, 20, 4, 3.0);
  const FeatureCodec codec = FeatureCodec::fit(features);
  const Matrix out = mee::transmit(features, codec, {ChannelMode::Ideal, 0.0, 9});
  for (std::size_t r = 0; r < features.rows(); ++r)
    for (std::size_t c = 0; c < features.cols(); ++c)
      CHECK(out(r, c) == codec.dequantize(codec.quantize(features(r, c), c), c));
}

TEST_CASE("awgn transmission") {
  std::mt19937_64 rng(13);
  const Matrix features = testutil::random_batch(rng, 50, 5, 2.0);
  const FeatureCodec codec = FeatureCodec::fit(features);

  SECTION("same seed reproduces output, different seed does not") {
    const ChannelConfig cfg{ChannelMode::Awgn, 5.0, 1234};
    const Matrix a = mee::transmit(features, codec, cfg);
    const Matrix b = mee::transmit(features, codec, cfg);
    const Matrix c = mee::transmit(features, codec, {ChannelMode::Awgn, 5.0, 1235});
    std::size_t diffs = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a.data()[i] == b.data()[i]);
      if (a.data()[i] != c.data()[i]) ++diffs;
    }
    CHECK(diffs > 0);
  }

  SECTION("very high snr leaves all symbols intact") {
    const Matrix clean = mee::transmit(features, codec, {ChannelMode::Ideal, 0.0, 0});
    const Matrix noisy = mee::transmit(features, codec, {ChannelMode::Awgn, 60.0, 7});
    for (std::size_t i = 0; i < clean.size(); ++i) CHECK(clean.data()[i] == noisy.data()[i]);
  }

  SECTION("non-finite features are rejected") {
    Matrix bad = features;
    bad(0, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(mee::transmit(bad, codec, {ChannelMode::Ideal, 0.0, 0}), mee::IngestError);
  }
}

TEST_CASE("channel noise calibration") {
  SECTION("awgn empirical variance matches the configured power") {
    const double snr_db = 7.0;
    const double want = mee::noise_power_from_snr(snr_db, 1.0);
    const std::vector<std::complex<double>> zeros(100000, {0.0, 0.0});
    const auto received = mee::channel_apply(zeros, {ChannelMode::Awgn, snr_db, 99});
    double sum = 0.0;
    for (const auto& z : received) sum += std::norm(z);
    CHECK(sum / static_cast<double>(received.size()) == Approx(want).epsilon(0.02));
  }

  SECTION("rayleigh coefficient has unit mean square") {
    std::mt19937_64 rng(101);
    double sum = 0.0;
    constexpr int kDraws = 100000;
    for (int i = 0; i < kDraws; ++i) sum += std::norm(mee::circular_gaussian(rng, 1.0));
    CHECK(sum / kDraws == Approx(1.0).epsilon(0.02));
  }

  SECTION("zero-forcing restores the symbol when noise is negligible") {
    std::vector<std::complex<double>> symbols{{0.5, -0.25}, {-1.0, 0.75}};
    const auto received = mee::channel_apply(symbols, {ChannelMode::Rayleigh, 120.0, 5});
    for (std::size_t i = 0; i < symbols.size(); ++i) {
      CHECK(received[i].real() == Approx(symbols[i].real()).margin(1e-4));
      CHECK(received[i].imag() == Approx(symbols[i].imag()).margin(1e-4));
    }
  }
}

TEST_CASE("symbol error rate against an independent monte-carlo model") {
  // Send one feature per symbol through the library path and count symbol
  // errors as changed quantization levels; compare to the from-scratch model.
  const double snr_db = 5.0;
  constexpr std::size_t kSymbols = 30000;

  std::mt19937_64 rng(17);
  Matrix features(kSymbols, 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double& v : features.data()) v = u(rng);
  FeatureCodec codec({0.0}, {1.0});

  const Matrix clean = mee::transmit(features, codec, {ChannelMode::Ideal, 0.0, 0});
  const Matrix noisy = mee::transmit(features, codec, {ChannelMode::Awgn, snr_db, 23});
  std::size_t errors = 0;
  for (std::size_t i = 0; i < kSymbols; ++i)
    if (clean.data()[i] != noisy.data()[i]) ++errors;
  const double ser = static_cast<double>(errors) / kSymbols;

  const double ser_mc = reference::monte_carlo_ser(snr_db, 200000, 31);
  CHECK(ser > 0.0);
  CHECK(ser == Approx(ser_mc).epsilon(0.20));
}
