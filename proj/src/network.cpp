#include "ulhm/network.hpp"

#include "ulhm/errors.hpp"
#include "ulhm/rng.hpp"

#include <cmath>
#include <random>

namespace ulhm {

const char* to_string(Activation a) {
  return a == Activation::tanh ? "tanh" : "leaky_relu";
}

Activation activation_from_string(const std::string& name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "leaky_relu") return Activation::leaky_relu;
  throw ConfigError("unknown activation '" + name + "'");
}

void Network::zero_grads() {
  for (auto& g : grad_w) g.setZero();
  for (auto& g : grad_b) g.setZero();
}

Network init_network(const NetworkSpec& spec) {
  if (spec.layer_sizes.size() < 2) throw ConfigError("network needs at least 2 layer sizes");
  for (Index s : spec.layer_sizes)
    if (s < 1) throw ConfigError("layer sizes must be positive");

  Network net;
  net.spec = spec;
  auto rng = make_rng(spec.seed);
  for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
    const Index fan_in = spec.layer_sizes[l];
    const Index fan_out = spec.layer_sizes[l + 1];
    const Scalar limit = std::sqrt(6.0 / static_cast<Scalar>(fan_in + fan_out));
    std::uniform_real_distribution<Scalar> uniform(-limit, limit);
    Matrix w(fan_out, fan_in);
    for (Index r = 0; r < fan_out; ++r)
      for (Index c = 0; c < fan_in; ++c) w(r, c) = uniform(rng);
    net.weights.push_back(std::move(w));
    net.biases.push_back(Vector::Zero(fan_out));
    net.grad_w.push_back(Matrix::Zero(fan_out, fan_in));
    net.grad_b.push_back(Vector::Zero(fan_out));
  }
  return net;
}

namespace {

Matrix activate(const Matrix& pre, Activation a) {
  if (a == Activation::tanh) return pre.array().tanh();
  return pre.array().max(pre.array() * 0.01);
}

Matrix activate_grad(const Matrix& pre, Activation a) {
  if (a == Activation::tanh) {
    const Matrix t = pre.array().tanh();
    return 1.0 - t.array().square();
  }
  return (pre.array() > 0).select(Matrix::Ones(pre.rows(), pre.cols()),
                                  Matrix::Constant(pre.rows(), pre.cols(), 0.01));
}

}  // namespace

ForwardCache forward(const Network& net, MatrixRef batch) {
  if (batch.cols() != net.input_dim())
    throw DimensionError("batch width " + std::to_string(batch.cols()) + " != network input " +
                         std::to_string(net.input_dim()));
  ForwardCache cache;
  cache.post.push_back(batch);
  for (std::size_t l = 0; l < net.n_layers(); ++l) {
    Matrix pre =
        (cache.post.back() * net.weights[l].transpose()).rowwise() + net.biases[l].transpose();
    const bool last = l + 1 == net.n_layers();
    cache.post.push_back(last ? pre : activate(pre, net.spec.activation));
    cache.pre.push_back(std::move(pre));
  }
  return cache;
}

Matrix backward(Network& net, const ForwardCache& cache, MatrixRef grad_output) {
  if (cache.post.size() != net.n_layers() + 1)
    throw DimensionError("forward cache does not match network depth");
  Matrix grad = grad_output;
  for (std::size_t l = net.n_layers(); l-- > 0;) {
    const bool last = l + 1 == net.n_layers();
    Matrix delta = last ? std::move(grad)
                        : Matrix(grad.array() * activate_grad(cache.pre[l],
                                                              net.spec.activation).array());
    net.grad_w[l] += delta.transpose() * cache.post[l];
    net.grad_b[l] += delta.colwise().sum().transpose();
    grad = delta * net.weights[l];
  }
  return grad;
}

namespace {

void check_finite(const Network& net) {
  for (std::size_t l = 0; l < net.n_layers(); ++l)
    if (!net.grad_w[l].allFinite() || !net.grad_b[l].allFinite())
      throw TrainingDivergedError("non-finite gradient in layer " + std::to_string(l));
}

}  // namespace

void sgd_step(Network& net, Scalar lr) {
  check_finite(net);
  for (std::size_t l = 0; l < net.n_layers(); ++l) {
    net.weights[l] -= lr * net.grad_w[l];
    net.biases[l] -= lr * net.grad_b[l];
  }
}

AdamState make_adam_state(const Network& net) {
  AdamState st;
  for (std::size_t l = 0; l < net.n_layers(); ++l) {
    st.m_w.push_back(Matrix::Zero(net.weights[l].rows(), net.weights[l].cols()));
    st.v_w.push_back(Matrix::Zero(net.weights[l].rows(), net.weights[l].cols()));
    st.m_b.push_back(Vector::Zero(net.biases[l].size()));
    st.v_b.push_back(Vector::Zero(net.biases[l].size()));
  }
  return st;
}

void adam_step(Network& net, AdamState& state, Scalar lr) {
  constexpr Scalar beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  check_finite(net);
  if (state.m_w.size() != net.n_layers()) throw ConfigError("adam state does not match network");
  ++state.t;
  const Scalar bc1 = 1.0 - std::pow(beta1, static_cast<Scalar>(state.t));
  const Scalar bc2 = 1.0 - std::pow(beta2, static_cast<Scalar>(state.t));
  for (std::size_t l = 0; l < net.n_layers(); ++l) {
    state.m_w[l] = beta1 * state.m_w[l] + (1 - beta1) * net.grad_w[l];
    state.v_w[l] = beta2 * state.v_w[l].array() + (1 - beta2) * net.grad_w[l].array().square();
    state.m_b[l] = beta1 * state.m_b[l] + (1 - beta1) * net.grad_b[l];
    state.v_b[l] = beta2 * state.v_b[l].array() + (1 - beta2) * net.grad_b[l].array().square();
    net.weights[l].array() -=
        lr * (state.m_w[l].array() / bc1) / ((state.v_w[l].array() / bc2).sqrt() + eps);
    net.biases[l].array() -=
        lr * (state.m_b[l].array() / bc1) / ((state.v_b[l].array() / bc2).sqrt() + eps);
  }
}

std::vector<Scalar> flatten_parameters(const Network& net) {
  std::vector<Scalar> flat;
  for (std::size_t l = 0; l < net.n_layers(); ++l) {
    const Matrix& w = net.weights[l];
    for (Index r = 0; r < w.rows(); ++r)
      for (Index c = 0; c < w.cols(); ++c) flat.push_back(w(r, c));
    for (Index r = 0; r < net.biases[l].size(); ++r) flat.push_back(net.biases[l](r));
  }
  return flat;
}

void load_parameters(Network& net, const std::vector<Scalar>& flat) {
  std::size_t at = 0;
  for (std::size_t l = 0; l < net.n_layers(); ++l) {
    Matrix& w = net.weights[l];
    if (at + static_cast<std::size_t>(w.size() + net.biases[l].size()) > flat.size())
      throw FormatError("parameter blob too short for network");
    for (Index r = 0; r < w.rows(); ++r)
      for (Index c = 0; c < w.cols(); ++c) w(r, c) = flat[at++];
    for (Index r = 0; r < net.biases[l].size(); ++r) net.biases[l](r) = flat[at++];
  }
  if (at != flat.size()) throw FormatError("parameter blob size does not match network");
}

}  // namespace ulhm
