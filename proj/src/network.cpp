#include "afmvc/network.hpp"

#include <cmath>

namespace afmvc {

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Relu: return "relu";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Softmax: return "softmax";
  }
  return "?";
}

Activation activation_from_name(const std::string& name) {
  if (name == "identity") return Activation::Identity;
  if (name == "relu") return Activation::Relu;
  if (name == "sigmoid") return Activation::Sigmoid;
  if (name == "softmax") return Activation::Softmax;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

std::string role_name(Role r) {
  switch (r) {
    case Role::Encoder: return "encoder";
    case Role::Decoder: return "decoder";
    case Role::Discriminator: return "discriminator";
  }
  return "?";
}

Role role_from_name(const std::string& name) {
  if (name == "encoder") return Role::Encoder;
  if (name == "decoder") return Role::Decoder;
  if (name == "discriminator") return Role::Discriminator;
  throw std::invalid_argument("unknown role '" + name + "'");
}

DenseNetwork DenseNetwork::make(Role role, const std::vector<int>& widths,
                                const std::vector<Activation>& acts, Rng& rng) {
  require(widths.size() >= 2, "DenseNetwork::make: need at least one layer");
  require(acts.size() == widths.size() - 1, "DenseNetwork::make: one activation per layer");
  for (int w : widths) require(w >= 1, "DenseNetwork::make: widths must be positive");
  for (std::size_t l = 0; l + 1 < acts.size(); ++l) {
    require(acts[l] != Activation::Softmax, "DenseNetwork::make: softmax only on the final layer");
  }
  if (acts.back() == Activation::Softmax) {
    require(role == Role::Discriminator,
            "DenseNetwork::make: softmax output is reserved for discriminators");
  }
  DenseNetwork net;
  net.role = role;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    Layer layer;
    const int fan_in = widths[l];
    const int fan_out = widths[l + 1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    layer.w.resize(fan_out, fan_in);
    for (Eigen::Index i = 0; i < layer.w.rows(); ++i)
      for (Eigen::Index j = 0; j < layer.w.cols(); ++j)
        layer.w(i, j) = rng.uniform(-bound, bound);
    layer.b = Vector::Zero(fan_out);
    layer.act = acts[l];
    net.layers.push_back(std::move(layer));
  }
  return net;
}

std::size_t DenseNetwork::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.w.size() + l.b.size());
  return n;
}

void DenseNetwork::check_finite(const std::string& context) const {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (!layers[l].w.allFinite() || !layers[l].b.allFinite()) {
      throw std::runtime_error(context + ": non-finite parameters in " + role_name(role) +
                               " layer " + std::to_string(l));
    }
  }
}

NetGrads NetGrads::zeros_like(const DenseNetwork& net) {
  NetGrads g;
  for (const auto& l : net.layers) {
    g.dw.push_back(Matrix::Zero(l.w.rows(), l.w.cols()));
    g.db.push_back(Vector::Zero(l.b.size()));
  }
  return g;
}

void NetGrads::add_scaled(const NetGrads& other, double scale) {
  require(dw.size() == other.dw.size(), "NetGrads::add_scaled: layer count mismatch");
  for (std::size_t l = 0; l < dw.size(); ++l) {
    dw[l] += scale * other.dw[l];
    db[l] += scale * other.db[l];
  }
}

void NetGrads::scale(double s) {
  for (std::size_t l = 0; l < dw.size(); ++l) {
    dw[l] *= s;
    db[l] *= s;
  }
}

double NetGrads::max_abs() const {
  double m = 0.0;
  for (std::size_t l = 0; l < dw.size(); ++l) {
    if (dw[l].size() > 0) m = std::max(m, dw[l].cwiseAbs().maxCoeff());
    if (db[l].size() > 0) m = std::max(m, db[l].cwiseAbs().maxCoeff());
  }
  return m;
}

bool NetGrads::all_finite() const {
  for (std::size_t l = 0; l < dw.size(); ++l) {
    if (!dw[l].allFinite() || !db[l].allFinite()) return false;
  }
  return true;
}

namespace {

Matrix apply_activation(const Matrix& pre, Activation act) {
  switch (act) {
    case Activation::Identity:
      return pre;
    case Activation::Relu:
      return pre.array().max(0.0).matrix();
    case Activation::Sigmoid:
      return (1.0 / (1.0 + (-pre.array()).exp())).matrix();
    case Activation::Softmax: {
      // row-wise, shifted by the row max for stability
      Matrix out(pre.rows(), pre.cols());
      for (Eigen::Index i = 0; i < pre.rows(); ++i) {
        const double mx = pre.row(i).maxCoeff();
        Eigen::ArrayXd e = (pre.row(i).array() - mx).exp();
        out.row(i) = (e / e.sum()).matrix();
      }
      return out;
    }
  }
  throw std::logic_error("apply_activation: unreachable");
}

// dL/d_pre given dL/d_post and the cached pre/post values.
Matrix activation_backward(const Matrix& grad_post, const Matrix& pre, const Matrix& post,
                           Activation act) {
  switch (act) {
    case Activation::Identity:
      return grad_post;
    case Activation::Relu:
      return (grad_post.array() * (pre.array() > 0.0).cast<double>()).matrix();
    case Activation::Sigmoid:
      return (grad_post.array() * post.array() * (1.0 - post.array())).matrix();
    case Activation::Softmax:
      throw std::logic_error("softmax backward must receive logit-space gradients");
  }
  throw std::logic_error("activation_backward: unreachable");
}

}  // namespace

Matrix forward(const DenseNetwork& net, const Matrix& x, GradTape* tape) {
  require(!net.layers.empty(), "forward: network has no layers");
  if (x.cols() != net.input_dim()) {
    throw std::invalid_argument("forward: input width " + std::to_string(x.cols()) +
                                " does not match network input " + std::to_string(net.input_dim()));
  }
  require(x.allFinite(), "forward: non-finite input");
  if (tape) {
    tape->net = &net;
    tape->inputs.clear();
    tape->pre.clear();
  }
  Matrix h = x;
  for (const auto& layer : net.layers) {
    if (tape) tape->inputs.push_back(h);
    Matrix pre = (h * layer.w.transpose()).rowwise() + layer.b.transpose();
    h = apply_activation(pre, layer.act);
    if (tape) tape->pre.push_back(std::move(pre));
  }
  if (tape) tape->output = h;
  return h;
}

Matrix backward(const DenseNetwork& net, const GradTape& tape, const Matrix& grad_output,
                NetGrads& grads) {
  if (tape.net != &net || tape.inputs.size() != net.layers.size()) {
    throw std::logic_error("backward: tape does not belong to this network/forward");
  }
  if (grads.dw.size() != net.layers.size()) grads = NetGrads::zeros_like(net);
  require(grad_output.rows() == tape.output.rows() && grad_output.cols() == tape.output.cols(),
          "backward: grad_output shape mismatch");

  Matrix delta;  // dL/d_pre of the current layer
  for (int l = static_cast<int>(net.layers.size()) - 1; l >= 0; --l) {
    const auto& layer = net.layers[static_cast<std::size_t>(l)];
    const Matrix& pre = tape.pre[static_cast<std::size_t>(l)];
    const Matrix& in = tape.inputs[static_cast<std::size_t>(l)];
    if (l == static_cast<int>(net.layers.size()) - 1) {
      if (layer.act == Activation::Softmax) {
        delta = grad_output;  // caller supplies logit-space gradients
      } else {
        delta = activation_backward(grad_output, pre, tape.output, layer.act);
      }
    }
    grads.dw[static_cast<std::size_t>(l)] += delta.transpose() * in;
    grads.db[static_cast<std::size_t>(l)] += delta.colwise().sum().transpose();
    Matrix grad_in = delta * layer.w;
    if (l > 0) {
      const auto& prev = net.layers[static_cast<std::size_t>(l - 1)];
      delta = activation_backward(grad_in, tape.pre[static_cast<std::size_t>(l - 1)],
                                  tape.inputs[static_cast<std::size_t>(l)], prev.act);
    } else {
      return grad_in;
    }
  }
  throw std::logic_error("backward: unreachable");
}

Matrix grl_backward(const Matrix& upstream_grad, double coeff) {
  require(std::isfinite(coeff) && coeff >= 0.0, "grl_backward: coeff must be finite and >= 0");
  return -coeff * upstream_grad;
}

AdamState AdamState::for_network(const DenseNetwork& net, double lr, double beta1, double beta2,
                                 double eps) {
  AdamState s;
  s.lr = lr;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.eps = eps;
  for (const auto& l : net.layers) {
    s.m_w.push_back(Matrix::Zero(l.w.rows(), l.w.cols()));
    s.v_w.push_back(Matrix::Zero(l.w.rows(), l.w.cols()));
    s.m_b.push_back(Vector::Zero(l.b.size()));
    s.v_b.push_back(Vector::Zero(l.b.size()));
  }
  return s;
}

void adam_step(DenseNetwork& net, const NetGrads& grads, AdamState& state,
               const std::string& context) {
  require(grads.dw.size() == net.layers.size(), "adam_step: gradient layer count mismatch");
  if (!grads.all_finite()) {
    throw std::runtime_error("adam_step: non-finite gradient in " + context);
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    auto& layer = net.layers[l];
    state.m_w[l] = state.beta1 * state.m_w[l] + (1.0 - state.beta1) * grads.dw[l];
    state.v_w[l] = state.beta2 * state.v_w[l] + (1.0 - state.beta2) * grads.dw[l].array().square().matrix();
    state.m_b[l] = state.beta1 * state.m_b[l] + (1.0 - state.beta1) * grads.db[l];
    state.v_b[l] = state.beta2 * state.v_b[l] + (1.0 - state.beta2) * grads.db[l].array().square().matrix();
    layer.w.array() -= state.lr * (state.m_w[l].array() / bc1) /
                       ((state.v_w[l].array() / bc2).sqrt() + state.eps);
    layer.b.array() -= state.lr * (state.m_b[l].array() / bc1) /
                       ((state.v_b[l].array() / bc2).sqrt() + state.eps);
  }
  net.check_finite(context);
}

std::pair<double, Matrix> mse_loss(const Matrix& x_hat, const Matrix& x) {
  if (x_hat.rows() != x.rows() || x_hat.cols() != x.cols()) {
    throw std::invalid_argument("mse_loss: shape mismatch");
  }
  const double b = static_cast<double>(x.rows());
  const Matrix diff = x_hat - x;
  const double loss = diff.array().square().sum() / b;
  return {loss, (2.0 / b) * diff};
}

std::pair<double, Matrix> cross_entropy_loss(const Matrix& probs, const std::vector<int>& targets) {
  require(static_cast<Eigen::Index>(targets.size()) == probs.rows(),
          "cross_entropy_loss: one target per row");
  const Eigen::Index b = probs.rows();
  const Eigen::Index g = probs.cols();
  for (Eigen::Index i = 0; i < b; ++i) {
    if (std::abs(probs.row(i).sum() - 1.0) > 1e-6) {
      throw std::invalid_argument("cross_entropy_loss: row " + std::to_string(i) +
                                  " is not a probability vector");
    }
  }
  double loss = 0.0;
  Matrix grad = probs;
  for (Eigen::Index i = 0; i < b; ++i) {
    const int t = targets[static_cast<std::size_t>(i)];
    if (t < 0 || t >= g) {
      throw std::invalid_argument("cross_entropy_loss: target " + std::to_string(t) +
                                  " out of range [0," + std::to_string(g) + ")");
    }
    loss -= std::log(std::max(probs(i, t), 1e-300));
    grad(i, t) -= 1.0;
  }
  loss /= static_cast<double>(b);
  grad /= static_cast<double>(b);
  return {loss, grad};
}

}  // namespace afmvc
