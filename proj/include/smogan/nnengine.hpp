#pragma once

#include <vector>

#include "smogan/coredata.hpp"
#include "smogan/rng.hpp"

namespace smogan {

/// Fully connected ReLU network with an identity output layer.
/// weights[l] is widths[l+1] x widths[l].
struct Mlp {
  std::vector<int> widths;
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  std::size_t layer_count() const noexcept { return weights.size(); }
  int input_dim() const { return widths.front(); }
  int output_dim() const { return widths.back(); }
  std::size_t parameter_count() const;
  void validate() const;
};

/// Parameter-shaped gradient (or moment) buffers.
struct MlpGradient {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  static MlpGradient zeros_like(const Mlp& net);
  MlpGradient& operator+=(const MlpGradient& other);
  MlpGradient& operator*=(double s);
  bool all_finite() const;
};

Mlp init_mlp(const std::vector<int>& widths, RngStream rng);

/// Widths of the GAN networks: d -> 128 -> 256 -> 128 -> out.
std::vector<int> gan_widths(int d, int out, std::vector<int> hidden = {128, 256, 128});

Matrix forward(const Mlp& net, const Matrix& batch);

/// Layer inputs and pre-activations kept for reverse passes.
struct ForwardTrace {
  std::vector<Matrix> inputs;   // inputs[l] feeds layer l
  std::vector<Matrix> preacts;  // preacts[l] = inputs[l] W_l^T + b_l
  const Matrix& output() const { return preacts.back(); }
};

ForwardTrace forward_trace(const Mlp& net, const Matrix& batch);

/// Reverse pass for a loss with d loss / d output = upstream (rows x out).
/// Adds parameter gradients into *grad when non-null; returns d loss / d input.
Matrix backward(const Mlp& net, const ForwardTrace& trace, const Matrix& upstream,
                MlpGradient* grad);

/// Gradient of a scalar-output network with respect to its input.
Vector input_gradient(const Mlp& net, const Vector& point);
Matrix input_gradients(const Mlp& net, const Matrix& points);

/// mean over rows of (||grad_u D(u_b)||_2 - 1)^2. When grad is non-null, adds
/// scale * d(mean)/d(theta_D), differentiating through the input gradient.
/// For a ReLU net the input gradient is a product of weight matrices and
/// fixed activation masks, so the bias contribution vanishes almost
/// everywhere and only the weight chain carries second-order terms.
double gradient_norm_penalty(const Mlp& critic, const Matrix& points, MlpGradient* grad,
                             double scale = 1.0);

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.0;
  double beta2 = 0.9;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  MlpGradient first_moment;
  MlpGradient second_moment;
  long step_count = 0;
};

AdamState make_adam(const Mlp& net, const AdamConfig& config);

/// One bias-corrected Adam update of net in place.
void adam_step(AdamState& state, Mlp& net, const MlpGradient& grad);

}  // namespace smogan
