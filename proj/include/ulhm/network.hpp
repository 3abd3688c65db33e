#pragma once

#include "ulhm/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ulhm {

enum class Activation { tanh, leaky_relu };  // leaky slope 0.01

const char* to_string(Activation a);
Activation activation_from_string(const std::string& name);

struct NetworkSpec {
  std::vector<Index> layer_sizes;  // [in, hidden..., out], at least 2 entries
  Activation activation = Activation::tanh;
  std::uint64_t seed = 0;
};

/// Fully-connected net; hidden layers use spec.activation, the final layer
/// is linear. Gradient buffers mirror the parameters and are accumulated by
/// backward(), so several losses can backprop into one network before a step.
struct Network {
  NetworkSpec spec;
  std::vector<Matrix> weights;  // layer l: out x in
  std::vector<Vector> biases;
  std::vector<Matrix> grad_w;
  std::vector<Vector> grad_b;

  std::size_t n_layers() const { return weights.size(); }
  Index input_dim() const { return spec.layer_sizes.front(); }
  Index output_dim() const { return spec.layer_sizes.back(); }
  void zero_grads();
};

/// Glorot-uniform weights (+-sqrt(6/(fan_in+fan_out))), zero biases,
/// deterministic per spec.seed.
Network init_network(const NetworkSpec& spec);

struct ForwardCache {
  std::vector<Matrix> post;  // post[0] = input, post[l+1] = layer l output
  std::vector<Matrix> pre;   // pre-activations per layer

  const Matrix& output() const { return post.back(); }
};

ForwardCache forward(const Network& net, MatrixRef batch);

/// Accumulates dL/dparams into net.grad_w / net.grad_b and returns dL/dinput
/// so gradients chain through composed networks.
Matrix backward(Network& net, const ForwardCache& cache, MatrixRef grad_output);

void sgd_step(Network& net, Scalar lr);

struct AdamState {
  std::vector<Matrix> m_w, v_w;
  std::vector<Vector> m_b, v_b;
  long t = 0;
};

AdamState make_adam_state(const Network& net);

/// beta1 = 0.9, beta2 = 0.999, eps = 1e-8, with bias correction.
void adam_step(Network& net, AdamState& state, Scalar lr);

/// Parameters in a fixed order (per layer: weights row-major, then bias);
/// the pair round-trips exactly and backs the checkpoint format.
std::vector<Scalar> flatten_parameters(const Network& net);
void load_parameters(Network& net, const std::vector<Scalar>& flat);

}  // namespace ulhm
