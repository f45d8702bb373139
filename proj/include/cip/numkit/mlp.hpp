#pragma once

#include <vector>

#include "cip/numkit/linalg.hpp"

namespace cip {

/// One affine layer. `weight` is (inputs x outputs), so a batch `X` (samples x
/// inputs) maps to `X * weight + bias^T`. The convention holds everywhere in the
/// repo: cols of layer k == rows of layer k+1.
struct DenseLayer {
  Matrix weight;
  Vector bias;
};

/// Fully connected network, tanh on hidden layers and identity on the output.
struct MlpParams {
  std::vector<DenseLayer> layers;

  Index input_dim() const { return layers.front().weight.rows(); }
  Index output_dim() const { return layers.back().weight.cols(); }
  Index parameter_count() const;
  bool all_finite() const;

  static MlpParams zeros_like(const MlpParams& other);
};

struct MlpShape {
  Index input_dim = 0;
  std::vector<Index> hidden;
  Index output_dim = 0;
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases. With
/// `zero_output_layer` the last layer starts at exactly zero.
MlpParams mlp_init(const MlpShape& shape, Rng& rng, bool zero_output_layer = false);

Vector mlp_forward(const MlpParams& params, const Vector& input);
Matrix mlp_forward_batch(const MlpParams& params, const Matrix& inputs);

/// Post-activation values of every layer; `activations[0]` is the input batch
/// and `activations.back()` the network output.
struct MlpTape {
  std::vector<Matrix> activations;
  const Matrix& output() const { return activations.back(); }
};

MlpTape mlp_forward_tape(const MlpParams& params, const Matrix& inputs);

/// Reverse pass for the scalar sum(upstream .* output). Returns parameter-shaped
/// gradients; writes d/d(inputs) into `input_grad` when non-null.
MlpParams mlp_backward(const MlpParams& params, const MlpTape& tape, const Matrix& upstream,
                       Matrix* input_grad = nullptr);

/// Single-sample gradient of upstream . mlp_forward(params, input).
MlpParams mlp_gradients(const MlpParams& params, const Vector& input, const Vector& upstream);

void polyak_update(MlpParams& target, const MlpParams& source, double tau);

/// Throws ConfigError unless `b` has exactly the layer shapes of `a`.
void require_same_shape(const MlpParams& a, const MlpParams& b, const char* what);

}  // namespace cip
