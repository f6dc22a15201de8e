#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "acmptc/random.hpp"

namespace acmptc {

/// Fully connected layer, weights stored row-major as out x in.
struct DenseLayer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  double& w(std::size_t row, std::size_t col) { return weights[row * inputs + col]; }
  double w(std::size_t row, std::size_t col) const { return weights[row * inputs + col]; }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Multi-layer perceptron with tanh on every hidden layer and a linear readout.
/// Gradients use the same type, so a gradient is itself an MlpParams.
struct MlpParams {
  std::vector<DenseLayer> layers;

  std::size_t input_size() const { return layers.empty() ? 0 : layers.front().inputs; }
  std::size_t output_size() const { return layers.empty() ? 0 : layers.back().outputs; }
  std::size_t parameter_count() const;
  std::vector<std::size_t> layer_sizes() const;

  /// All parameters in layer order: weights then bias of each layer.
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);
  bool all_finite() const;
  double squared_norm() const;

  friend bool operator==(const MlpParams&, const MlpParams&) = default;
};

/// `sizes` = {input, hidden..., output}. Weights uniform in +-1/sqrt(fan_in), biases zero.
MlpParams make_mlp(std::span<const std::size_t> sizes, Rng& rng);

/// Same shapes as `like`, every entry zero.
MlpParams zeros_like(const MlpParams& like);

/// Parameter count of an architecture without building it.
std::size_t mlp_parameter_count(std::span<const std::size_t> sizes);

std::vector<double> mlp_forward(const MlpParams& params, std::span<const double> input);

/// Layer activations recorded for backpropagation; activations[0] is the input,
/// activations.back() the linear output.
struct MlpTape {
  std::vector<std::vector<double>> activations;

  const std::vector<double>& output() const { return activations.back(); }
};

MlpTape mlp_forward_tape(const MlpParams& params, std::span<const double> input);

/// Gradient of a scalar loss w.r.t. every parameter given dLoss/dOutput.
MlpParams mlp_backward(const MlpParams& params, const MlpTape& tape, std::span<const double> output_grad);

std::vector<double> softmax(std::span<const double> logits);

}  // namespace acmptc
