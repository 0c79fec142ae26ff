#pragma once

// Minimal dense feed-forward network with reverse-mode gradients and Adam.
// Layers compute y = act(x W + b) with W stored input x output; batches are
// row-major (one sample per row) throughout.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "mee/error.hpp"
#include "mee/matrix.hpp"
#include "mee/rng.hpp"

namespace mee {

enum class Activation { Relu, Linear };

struct DenseLayer {
  Matrix weights;              // in x out
  std::vector<double> biases;  // out
  Activation activation = Activation::Linear;

  std::size_t input_dim() const { return weights.rows(); }
  std::size_t output_dim() const { return weights.cols(); }
};

class Network {
 public:
  explicit Network(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw ConfigError("network: needs at least one layer");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const DenseLayer& layer = layers_[l];
      if (layer.weights.rows() == 0 || layer.weights.cols() == 0)
        throw ShapeError("network: empty weight matrix in layer " + std::to_string(l));
      if (layer.biases.size() != layer.output_dim())
        throw ShapeError("network: bias size mismatch in layer " + std::to_string(l));
      if (l > 0 && layer.input_dim() != layers_[l - 1].output_dim())
        throw ShapeError("network: layer " + std::to_string(l) + " input dim " +
                         std::to_string(layer.input_dim()) + " != previous output dim " +
                         std::to_string(layers_[l - 1].output_dim()));
    }
    if (layers_.back().activation != Activation::Linear)
      throw ConfigError("network: output layer must be linear");
  }

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  std::size_t depth() const { return layers_.size(); }
  std::size_t input_dim() const { return layers_.front().input_dim(); }
  std::size_t output_dim() const { return layers_.back().output_dim(); }

 private:
  std::vector<DenseLayer> layers_;
};

// He-style initialization: hidden (relu-fed) layers draw weights from
// N(0, 2/fan_in), the final linear layer from N(0, 1/fan_in); biases start
// at zero. `layer_sizes` lists every width input..output.
inline Network init_network(const std::vector<std::size_t>& layer_sizes, std::uint64_t seed) {
  if (layer_sizes.size() < 2)
    throw ConfigError("init_network: need input and output sizes at least");
  for (std::size_t s : layer_sizes)
    if (s == 0) throw ConfigError("init_network: zero layer width");

  std::mt19937_64 rng(seed);
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const std::size_t fan_in = layer_sizes[l];
    const std::size_t fan_out = layer_sizes[l + 1];
    const bool last = (l + 2 == layer_sizes.size());
    const double stddev =
        last ? std::sqrt(1.0 / static_cast<double>(fan_in)) : std::sqrt(2.0 / static_cast<double>(fan_in));
    std::normal_distribution<double> gauss(0.0, stddev);

    DenseLayer layer;
    layer.weights = Matrix(fan_in, fan_out);
    for (double& w : layer.weights.data()) w = gauss(rng);
    layer.biases.assign(fan_out, 0.0);
    layer.activation = last ? Activation::Linear : Activation::Relu;
    layers.push_back(std::move(layer));
  }
  return Network(std::move(layers));
}

// Per-layer intermediates cached by the forward pass for backprop.
struct ForwardTrace {
  std::vector<Matrix> layer_inputs;     // input batch of each layer
  std::vector<Matrix> pre_activations;  // x W + b of each layer
};

struct ForwardPass {
  Matrix outputs;
  ForwardTrace trace;
};

inline ForwardPass forward(const Network& net, const Matrix& batch) {
  if (batch.cols() != net.input_dim())
    throw ShapeError("forward: batch width " + std::to_string(batch.cols()) +
                     " != network input dim " + std::to_string(net.input_dim()));
  ForwardPass pass;
  Matrix x = batch;
  for (const DenseLayer& layer : net.layers()) {
    pass.trace.layer_inputs.push_back(x);
    Matrix pre = matmul(x, layer.weights);
    for (std::size_t i = 0; i < pre.rows(); ++i) {
      double* row = pre.row(i);
      for (std::size_t j = 0; j < pre.cols(); ++j) row[j] += layer.biases[j];
    }
    pass.trace.pre_activations.push_back(pre);
    if (layer.activation == Activation::Relu) {
      for (double& v : pre.data()) v = v > 0.0 ? v : 0.0;
    }
    x = std::move(pre);
  }
  pass.outputs = std::move(x);
  return pass;
}

// Forward pass without trace bookkeeping, for evaluation.
inline Matrix predict(const Network& net, const Matrix& batch) {
  if (batch.cols() != net.input_dim())
    throw ShapeError("predict: batch width != network input dim");
  Matrix x = batch;
  for (const DenseLayer& layer : net.layers()) {
    Matrix pre = matmul(x, layer.weights);
    for (std::size_t i = 0; i < pre.rows(); ++i) {
      double* row = pre.row(i);
      for (std::size_t j = 0; j < pre.cols(); ++j) row[j] += layer.biases[j];
    }
    if (layer.activation == Activation::Relu)
      for (double& v : pre.data()) v = v > 0.0 ? v : 0.0;
    x = std::move(pre);
  }
  return x;
}

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;
};

// Reverse-mode chain rule from dL/d(outputs) back to every parameter.
inline Gradients backward(const Network& net, const ForwardTrace& trace, const Matrix& d_outputs) {
  const std::size_t depth = net.depth();
  if (trace.layer_inputs.size() != depth || trace.pre_activations.size() != depth)
    throw ShapeError("backward: trace depth does not match network");
  if (d_outputs.rows() != trace.layer_inputs.front().rows() ||
      d_outputs.cols() != net.output_dim())
    throw ShapeError("backward: d_outputs shape mismatch");

  Gradients grads;
  grads.weights.resize(depth);
  grads.biases.resize(depth);

  Matrix delta = d_outputs;
  for (std::size_t l = depth; l-- > 0;) {
    const DenseLayer& layer = net.layers()[l];
    const Matrix& pre = trace.pre_activations[l];
    if (!delta.same_shape(pre)) throw ShapeError("backward: delta shape mismatch");
    if (layer.activation == Activation::Relu) {
      for (std::size_t i = 0; i < delta.size(); ++i)
        if (pre.data()[i] <= 0.0) delta.data()[i] = 0.0;
    }
    grads.weights[l] = matmul_at(trace.layer_inputs[l], delta);
    grads.biases[l] = column_sums(delta);
    if (l > 0) delta = matmul_bt(delta, layer.weights);
  }
  return grads;
}

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First/second-moment accumulators for Adam, shaped like the network.
class AdamState {
 public:
  AdamState(const Network& net, AdamConfig config) : config_(config) {
    for (const DenseLayer& layer : net.layers()) {
      m_w_.emplace_back(layer.weights.rows(), layer.weights.cols());
      v_w_.emplace_back(layer.weights.rows(), layer.weights.cols());
      m_b_.emplace_back(layer.biases.size(), 0.0);
      v_b_.emplace_back(layer.biases.size(), 0.0);
    }
  }

  const AdamConfig& config() const { return config_; }
  std::uint64_t steps_taken() const { return step_; }

  friend void adam_step(Network& net, const Gradients& grads, AdamState& state);

 private:
  AdamConfig config_;
  std::uint64_t step_ = 0;
  std::vector<Matrix> m_w_, v_w_;
  std::vector<std::vector<double>> m_b_, v_b_;
};

// One bias-corrected Adam update, in place.
inline void adam_step(Network& net, const Gradients& grads, AdamState& state) {
  const std::size_t depth = net.depth();
  if (grads.weights.size() != depth || grads.biases.size() != depth)
    throw ShapeError("adam_step: gradient depth does not match network");
  for (std::size_t l = 0; l < depth; ++l) {
    if (!grads.weights[l].same_shape(net.layers()[l].weights) ||
        grads.biases[l].size() != net.layers()[l].biases.size())
      throw ShapeError("adam_step: gradient shape mismatch in layer " + std::to_string(l));
    if (!all_finite(grads.weights[l]))
      throw TrainingError("adam_step: non-finite weight gradient in layer " + std::to_string(l));
    for (double g : grads.biases[l])
      if (!std::isfinite(g))
        throw TrainingError("adam_step: non-finite bias gradient in layer " + std::to_string(l));
  }

  const AdamConfig& cfg = state.config_;
  state.step_ += 1;
  const double t = static_cast<double>(state.step_);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);

  auto update = [&](double& param, double grad, double& m, double& v) {
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad * grad;
    const double m_hat = m / bc1;
    const double v_hat = v / bc2;
    param -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  };

  for (std::size_t l = 0; l < depth; ++l) {
    DenseLayer& layer = net.layers()[l];
    for (std::size_t i = 0; i < layer.weights.size(); ++i)
      update(layer.weights.data()[i], grads.weights[l].data()[i], state.m_w_[l].data()[i],
             state.v_w_[l].data()[i]);
    for (std::size_t j = 0; j < layer.biases.size(); ++j)
      update(layer.biases[j], grads.biases[l][j], state.m_b_[l][j], state.v_b_[l][j]);
  }
}

}  // namespace mee
