#include "acmptc/mlp.hpp"

#include <algorithm>
#include <cmath>

#include "acmptc/error.hpp"

namespace acmptc {

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const DenseLayer& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

std::vector<std::size_t> MlpParams::layer_sizes() const {
  std::vector<std::size_t> sizes;
  if (layers.empty()) return sizes;
  sizes.push_back(layers.front().inputs);
  for (const DenseLayer& l : layers) sizes.push_back(l.outputs);
  return sizes;
}

std::vector<double> MlpParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const DenseLayer& l : layers) {
    flat.insert(flat.end(), l.weights.begin(), l.weights.end());
    flat.insert(flat.end(), l.bias.begin(), l.bias.end());
  }
  return flat;
}

void MlpParams::assign(std::span<const double> flat) {
  if (flat.size() != parameter_count()) {
    throw ShapeError("MlpParams::assign: expected " + std::to_string(parameter_count()) + " values, got " +
                     std::to_string(flat.size()));
  }
  auto it = flat.begin();
  for (DenseLayer& l : layers) {
    std::copy_n(it, l.weights.size(), l.weights.begin());
    it += static_cast<std::ptrdiff_t>(l.weights.size());
    std::copy_n(it, l.bias.size(), l.bias.begin());
    it += static_cast<std::ptrdiff_t>(l.bias.size());
  }
}

bool MlpParams::all_finite() const {
  for (const DenseLayer& l : layers) {
    for (double v : l.weights) {
      if (!std::isfinite(v)) return false;
    }
    for (double v : l.bias) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

double MlpParams::squared_norm() const {
  double s = 0.0;
  for (const DenseLayer& l : layers) {
    for (double v : l.weights) s += v * v;
    for (double v : l.bias) s += v * v;
  }
  return s;
}

std::size_t mlp_parameter_count(std::span<const std::size_t> sizes) {
  std::size_t n = 0;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) n += sizes[i] * sizes[i + 1] + sizes[i + 1];
  return n;
}

MlpParams make_mlp(std::span<const std::size_t> sizes, Rng& rng) {
  if (sizes.size() < 2) throw ShapeError("make_mlp: need at least input and output sizes");
  MlpParams params;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    if (sizes[i] == 0 || sizes[i + 1] == 0) throw ShapeError("make_mlp: layer sizes must be positive");
    DenseLayer layer;
    layer.inputs = sizes[i];
    layer.outputs = sizes[i + 1];
    layer.weights.resize(layer.inputs * layer.outputs);
    layer.bias.assign(layer.outputs, 0.0);
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.inputs));
    for (double& w : layer.weights) w = rng.uniform(-bound, bound);
    params.layers.push_back(std::move(layer));
  }
  return params;
}

MlpParams zeros_like(const MlpParams& like) {
  MlpParams z = like;
  for (DenseLayer& l : z.layers) {
    std::fill(l.weights.begin(), l.weights.end(), 0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
  return z;
}

MlpTape mlp_forward_tape(const MlpParams& params, std::span<const double> input) {
  if (params.layers.empty()) throw ShapeError("mlp_forward: network has no layers");
  if (input.size() != params.input_size()) {
    throw ShapeError("mlp_forward: input has " + std::to_string(input.size()) + " entries, network expects " +
                     std::to_string(params.input_size()));
  }
  MlpTape tape;
  tape.activations.reserve(params.layers.size() + 1);
  tape.activations.emplace_back(input.begin(), input.end());
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    const DenseLayer& l = params.layers[k];
    const std::vector<double>& x = tape.activations.back();
    if (x.size() != l.inputs) throw ShapeError("mlp_forward: inconsistent layer shapes");
    std::vector<double> y(l.bias);
    for (std::size_t r = 0; r < l.outputs; ++r) {
      const double* row = l.weights.data() + r * l.inputs;
      double acc = 0.0;
      for (std::size_t c = 0; c < l.inputs; ++c) acc += row[c] * x[c];
      y[r] += acc;
    }
    if (k + 1 < params.layers.size()) {
      for (double& v : y) v = std::tanh(v);
    }
    tape.activations.push_back(std::move(y));
  }
  return tape;
}

std::vector<double> mlp_forward(const MlpParams& params, std::span<const double> input) {
  return std::move(mlp_forward_tape(params, input).activations.back());
}

MlpParams mlp_backward(const MlpParams& params, const MlpTape& tape, std::span<const double> output_grad) {
  if (tape.activations.size() != params.layers.size() + 1) throw ShapeError("mlp_backward: tape does not match");
  if (output_grad.size() != params.output_size()) throw ShapeError("mlp_backward: output gradient size");
  MlpParams grad = zeros_like(params);
  // delta holds dLoss / d(pre-activation) of the current layer.
  std::vector<double> delta(output_grad.begin(), output_grad.end());
  for (std::size_t k = params.layers.size(); k-- > 0;) {
    const DenseLayer& l = params.layers[k];
    DenseLayer& g = grad.layers[k];
    const std::vector<double>& x = tape.activations[k];
    for (std::size_t r = 0; r < l.outputs; ++r) {
      g.bias[r] = delta[r];
      double* grow = g.weights.data() + r * l.inputs;
      for (std::size_t c = 0; c < l.inputs; ++c) grow[c] = delta[r] * x[c];
    }
    if (k == 0) break;
    std::vector<double> upstream(l.inputs, 0.0);
    for (std::size_t r = 0; r < l.outputs; ++r) {
      const double* row = l.weights.data() + r * l.inputs;
      for (std::size_t c = 0; c < l.inputs; ++c) upstream[c] += row[c] * delta[r];
    }
    // x is tanh(z) for every layer input except the network input.
    for (std::size_t c = 0; c < l.inputs; ++c) upstream[c] *= 1.0 - x[c] * x[c];
    delta = std::move(upstream);
  }
  return grad;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.begin(), logits.end());
  if (out.empty()) return out;
  const double top = *std::max_element(out.begin(), out.end());
  double sum = 0.0;
  for (double& v : out) {
    v = std::exp(v - top);
    sum += v;
  }
  for (double& v : out) v /= sum;
  return out;
}

}  // namespace acmptc
