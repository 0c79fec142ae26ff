#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "mee/nn.hpp"
#include "testing_util.hpp"

using Catch::Approx;
using mee::Activation;
using mee::DenseLayer;
using mee::Matrix;
using mee::Network;

namespace {

// Small hand-built network: one relu hidden layer, one linear output.
Network two_layer(const Matrix& w1, const std::vector<double>& b1, const Matrix& w2,
                  const std::vector<double>& b2) {
  DenseLayer hidden{w1, b1, Activation::Relu};
  DenseLayer out{w2, b2, Activation::Linear};
  return Network({hidden, out});
}

}  // namespace

TEST_CASE("network initialization") {
  const std::vector<std::size_t> sizes{5, 20, 20, 30, 1};
  const Network net = mee::init_network(sizes, 123);

  REQUIRE(net.depth() == 4);
  CHECK(net.input_dim() == 5);
  CHECK(net.output_dim() == 1);
  for (std::size_t l = 0; l < 4; ++l) {
    const DenseLayer& layer = net.layers()[l];
    CHECK(layer.weights.rows() == sizes[l]);
    CHECK(layer.weights.cols() == sizes[l + 1]);
    CHECK(layer.activation == (l == 3 ? Activation::Linear : Activation::Relu));
    for (double b : layer.biases) CHECK(b == 0.0);
  }

  SECTION("same seed reproduces weights exactly") {
    const Network again = mee::init_network(sizes, 123);
    for (std::size_t l = 0; l < 4; ++l)
      for (std::size_t i = 0; i < net.layers()[l].weights.size(); ++i)
        CHECK(net.layers()[l].weights.data()[i] == again.layers()[l].weights.data()[i]);
  }

  SECTION("weight spread follows the fan-in rule") {
    // 20 -> 30 relu-fed hidden layer: sample stddev near sqrt(2/20).
    const Matrix& w = net.layers()[2].weights;
    double sumsq = 0.0;
    for (double v : w.data()) sumsq += v * v;
    const double stddev = std::sqrt(sumsq / static_cast<double>(w.size()));
    CHECK(stddev == Approx(std::sqrt(2.0 / 20.0)).epsilon(0.15));
  }

  SECTION("bad sizes throw") {
    CHECK_THROWS_AS(mee::init_network({4}, 1), mee::ConfigError);
    CHECK_THROWS_AS(mee::init_network({4, 0, 2}, 1), mee::ConfigError);
  }
}

TEST_CASE("forward pass") {
  SECTION("single linear layer computes x W + b") {
    DenseLayer lin{Matrix::from_rows({{2.0}, {3.0}}), {1.0}, Activation::Linear};
    const Network net{std::vector<DenseLayer>{lin}};
    const Matrix x = Matrix::from_rows({{1.0, 1.0}, {0.5, -1.0}});
    const mee::ForwardPass pass = mee::forward(net, x);
    CHECK(pass.outputs(0, 0) == Approx(6.0));
    CHECK(pass.outputs(1, 0) == Approx(-1.0));
    REQUIRE(pass.trace.layer_inputs.size() == 1);
    CHECK(pass.trace.pre_activations[0](0, 0) == Approx(6.0));
  }

  SECTION("relu hidden layer clamps negative pre-activations") {
    // All-negative hidden pre-activation: output collapses to the output bias.
    const Network net = two_layer(Matrix::from_rows({{-1.0, -2.0}}), {0.0, 0.0},
                                  Matrix::from_rows({{5.0}, {7.0}}), {0.25});
    const Matrix x = Matrix::from_rows({{3.0}});
    const mee::ForwardPass pass = mee::forward(net, x);
    CHECK(pass.trace.pre_activations[0](0, 0) == -3.0);
    CHECK(pass.outputs(0, 0) == 0.25);
  }

  SECTION("predict matches forward") {
    const Network net = mee::init_network({3, 8, 2}, 5);
    std::mt19937_64 rng(5);
    const Matrix x = testutil::random_batch(rng, 4, 3);
    const Matrix a = mee::predict(net, x);
    const Matrix b = mee::forward(net, x).outputs;
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.data()[i] == b.data()[i]);
  }

  SECTION("width mismatch throws") {
    const Network net = mee::init_network({3, 4, 1}, 9);
    CHECK_THROWS_AS(mee::forward(net, Matrix(2, 5)), mee::ShapeError);
  }

  SECTION("output layer must be linear") {
    DenseLayer relu_out{Matrix(2, 1), {0.0}, Activation::Relu};
    CHECK_THROWS_AS(Network({relu_out}), mee::ConfigError);
  }
}

TEST_CASE("backward pass") {
  SECTION("zero upstream gradient yields zero parameter gradients") {
    const Network net = mee::init_network({3, 6, 2}, 17);
    std::mt19937_64 rng(17);
    const Matrix x = testutil::random_batch(rng, 5, 3);
    const mee::ForwardPass pass = mee::forward(net, x);
    const mee::Gradients grads = mee::backward(net, pass.trace, Matrix(5, 2));
    for (const Matrix& gw : grads.weights)
      for (double v : gw.data()) CHECK(v == 0.0);
    for (const auto& gb : grads.biases)
      for (double v : gb) CHECK(v == 0.0);
  }

  SECTION("single linear layer, sum loss: weight gradient is column sums of inputs") {
    DenseLayer lin{Matrix(2, 1), {0.0}, Activation::Linear};
    lin.weights(0, 0) = 0.3;
    lin.weights(1, 0) = -0.7;
    const Network net{std::vector<DenseLayer>{lin}};
    const Matrix x = Matrix::from_rows({{1.0, 2.0}, {3.0, 4.0}, {5.0, 6.0}});
    const mee::ForwardPass pass = mee::forward(net, x);
    const mee::Gradients grads = mee::backward(net, pass.trace, Matrix(3, 1, 1.0));
    CHECK(grads.weights[0](0, 0) == Approx(9.0));
    CHECK(grads.weights[0](1, 0) == Approx(12.0));
    CHECK(grads.biases[0][0] == Approx(3.0));
  }

  SECTION("finite differences over every parameter") {
    std::mt19937_64 rng(29);
    for (int rep = 0; rep < 6; ++rep) {
      Network net =
          mee::init_network({static_cast<std::size_t>(2 + rep % 3), 5, 4, 2}, 100 + rep);
      // Nudge biases off zero so no relu pre-activation sits on its kink,
      // where central differences straddle the subgradient.
      for (auto& layer : net.layers())
        for (std::size_t j = 0; j < layer.biases.size(); ++j)
          layer.biases[j] = 0.05 + 0.01 * static_cast<double>(j);
      const Matrix x = testutil::random_batch(rng, 6, net.input_dim());
      const Matrix dout = testutil::random_batch(rng, 6, net.output_dim());

      {
        const mee::ForwardPass probe = mee::forward(net, x);
        double min_pre = 1e300;
        for (std::size_t l = 0; l + 1 < net.depth(); ++l)
          for (double p : probe.trace.pre_activations[l].data())
            min_pre = std::min(min_pre, std::abs(p));
        REQUIRE(min_pre > 1e-3);  // finite differences are only valid off the kink
      }

      // Scalar objective: sum over the batch of <dout, outputs>.
      auto objective = [&](const Network& candidate) {
        const Matrix y = mee::predict(candidate, x);
        double s = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) s += y.data()[i] * dout.data()[i];
        return s;
      };

      const mee::ForwardPass pass = mee::forward(net, x);
      const mee::Gradients grads = mee::backward(net, pass.trace, dout);

      const double h = 1e-5;
      double worst = 0.0;
      for (std::size_t l = 0; l < net.depth(); ++l) {
        for (std::size_t i = 0; i < net.layers()[l].weights.size(); ++i) {
          double& w = net.layers()[l].weights.data()[i];
          const double keep = w;
          w = keep + h;
          const double up = objective(net);
          w = keep - h;
          const double down = objective(net);
          w = keep;
          worst = std::max(worst,
                           testutil::rel_error(grads.weights[l].data()[i], (up - down) / (2 * h)));
        }
        for (std::size_t j = 0; j < net.layers()[l].biases.size(); ++j) {
          double& b = net.layers()[l].biases[j];
          const double keep = b;
          b = keep + h;
          const double up = objective(net);
          b = keep - h;
          const double down = objective(net);
          b = keep;
          worst = std::max(worst, testutil::rel_error(grads.biases[l][j], (up - down) / (2 * h)));
        }
      }
      CHECK(worst < 1e-6);
    }
  }

  SECTION("trace mismatch throws") {
    const Network net = mee::init_network({3, 4, 1}, 3);
    const Network other = mee::init_network({3, 4, 4, 1}, 3);
    const mee::ForwardPass pass = mee::forward(net, Matrix(2, 3, 0.5));
    CHECK_THROWS_AS(mee::backward(other, pass.trace, Matrix(2, 1)), mee::ShapeError);
    CHECK_THROWS_AS(mee::backward(net, pass.trace, Matrix(2, 2)), mee::ShapeError);
  }
}

TEST_CASE("adam updates") {
  SECTION("first step moves a unit-gradient weight by the learning rate") {
    DenseLayer lin{Matrix(1, 1), {0.0}, Activation::Linear};
    Network net{std::vector<DenseLayer>{lin}};
    mee::AdamState state(net, {0.001, 0.9, 0.999, 1e-8});
    mee::Gradients grads;
    grads.weights = {Matrix(1, 1, 1.0)};
    grads.biases = {{0.0}};
    mee::adam_step(net, grads, state);
    // Bias-corrected moments make the first step exactly lr / (1 + epsilon).
    CHECK(net.layers()[0].weights(0, 0) == Approx(-0.001 / (1.0 + 1e-8)).epsilon(1e-12));
    CHECK(net.layers()[0].biases[0] == 0.0);  // zero gradient leaves bias put
  }

  SECTION("deterministic across repeat runs") {
    auto run = [] {
      Network net = mee::init_network({2, 4, 1}, 77);
      mee::AdamState state(net, {0.01, 0.9, 0.999, 1e-8});
      std::mt19937_64 rng(77);
      for (int step = 0; step < 20; ++step) {
        const Matrix x = testutil::random_batch(rng, 4, 2);
        const mee::ForwardPass pass = mee::forward(net, x);
        const mee::Gradients grads = mee::backward(net, pass.trace, Matrix(4, 1, 0.1));
        mee::adam_step(net, grads, state);
      }
      return net;
    };
    const Network a = run();
    const Network b = run();
    for (std::size_t l = 0; l < a.depth(); ++l)
      for (std::size_t i = 0; i < a.layers()[l].weights.size(); ++i)
        CHECK(a.layers()[l].weights.data()[i] == b.layers()[l].weights.data()[i]);
  }

  SECTION("non-finite gradient names the layer") {
    Network net = mee::init_network({2, 3, 1}, 1);
    mee::AdamState state(net, {});
    mee::Gradients grads;
    grads.weights = {Matrix(2, 3), Matrix(3, 1)};
    grads.biases = {{0, 0, 0}, {0}};
    grads.weights[1](0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_WITH(mee::adam_step(net, grads, state),
                      Catch::Matchers::ContainsSubstring("layer 1"));
  }
}
