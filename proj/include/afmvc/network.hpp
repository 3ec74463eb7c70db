#pragma once

#include <string>
#include <utility>
#include <vector>

#include "afmvc/common.hpp"

namespace afmvc {

enum class Activation { Identity, Relu, Sigmoid, Softmax };

enum class Role { Encoder, Decoder, Discriminator };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);
std::string role_name(Role r);
Role role_from_name(const std::string& name);

struct Layer {
  Matrix w;  // out x in
  Vector b;  // out
  Activation act = Activation::Identity;
};

// Dense feedforward stack. Inputs and outputs are row-major batches
// (B x d). Softmax is permitted only as the final activation of a
// discriminator; its backward contract is fused with cross_entropy_loss
// (see backward()).
struct DenseNetwork {
  std::vector<Layer> layers;
  Role role = Role::Encoder;

  // widths = [d_in, h_1, ..., d_out]; acts has widths.size()-1 entries.
  // Weights are Glorot-uniform in +-sqrt(6/(fan_in+fan_out)), biases zero.
  static DenseNetwork make(Role role, const std::vector<int>& widths,
                           const std::vector<Activation>& acts, Rng& rng);

  int input_dim() const { return static_cast<int>(layers.front().w.cols()); }
  int output_dim() const { return static_cast<int>(layers.back().w.rows()); }
  std::size_t parameter_count() const;
  void check_finite(const std::string& context) const;
};

// Cached intermediates from one forward pass, consumed by backward().
struct GradTape {
  const DenseNetwork* net = nullptr;
  std::vector<Matrix> inputs;  // inputs[l] = activation entering layer l (inputs[0] = x)
  std::vector<Matrix> pre;     // pre[l] = affine output of layer l
  Matrix output;               // post-activation of the final layer
};

// Per-layer gradient store matching a network's parameter shapes.
struct NetGrads {
  std::vector<Matrix> dw;
  std::vector<Vector> db;

  static NetGrads zeros_like(const DenseNetwork& net);
  void add_scaled(const NetGrads& other, double scale);
  void scale(double s);
  double max_abs() const;
  bool all_finite() const;
};

// Composes the affine+activation maps over the batch; fills `tape` when
// non-null. Softmax rows sum to 1 and are strictly positive.
Matrix forward(const DenseNetwork& net, const Matrix& x, GradTape* tape = nullptr);

// Exact chain-rule gradients of the scalar whose output-gradient is
// `grad_output`. For a final softmax layer, `grad_output` must be the
// gradient w.r.t. the pre-softmax logits (the form cross_entropy_loss
// returns); for all other activations it is the gradient w.r.t. the
// layer output. Throws std::logic_error on a tape from another network.
// Returns the gradient w.r.t. the input batch and accumulates parameter
// gradients into `grads`.
Matrix backward(const DenseNetwork& net, const GradTape& tape, const Matrix& grad_output,
                NetGrads& grads);

// Gradient-reversal backward rule: identity forward, -coeff * grad back.
Matrix grl_backward(const Matrix& upstream_grad, double coeff);

// Adam moment accumulators for one network.
struct AdamState {
  std::vector<Matrix> m_w, v_w;
  std::vector<Vector> m_b, v_b;
  long t = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState for_network(const DenseNetwork& net, double lr = 1e-3, double beta1 = 0.9,
                               double beta2 = 0.999, double eps = 1e-8);
};

// Standard bias-corrected Adam update. Aborts with a diagnostic naming
// `context` if any gradient is non-finite.
void adam_step(DenseNetwork& net, const NetGrads& grads, AdamState& state,
               const std::string& context);

// Batch-mean of squared L2 row norms; gradient w.r.t. x_hat.
std::pair<double, Matrix> mse_loss(const Matrix& x_hat, const Matrix& x);

// Mean negative log-likelihood of the target class. `probs` rows must
// sum to 1 (within 1e-6); the returned gradient is w.r.t. the
// pre-softmax logits: (probs - one_hot) / B.
std::pair<double, Matrix> cross_entropy_loss(const Matrix& probs, const std::vector<int>& targets);

}  // namespace afmvc
