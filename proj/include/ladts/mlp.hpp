#pragma once

#include <span>
#include <string>
#include <vector>

#include "ladts/rng.hpp"

namespace ladts {

// Dense network with ReLU hidden layers and a linear output layer.
// Weights are row-major [out][in]. Small enough that everything is
// plain value types; copies are cheap and used freely for target nets.
struct Mlp {
  std::vector<int> dims;                // e.g. {28, 20, 20, 5}
  std::vector<std::vector<double>> w;   // per layer, size out*in
  std::vector<std::vector<double>> b;   // per layer, size out

  int num_layers() const { return static_cast<int>(w.size()); }
  int input_dim() const { return dims.front(); }
  int output_dim() const { return dims.back(); }
};

// Uniform init in +-1/sqrt(fan_in); biases zero.
Mlp make_mlp(std::span<const int> dims, Rng& rng);
Mlp make_zero_mlp(std::span<const int> dims);

// Post-activation values per layer; act[0] is the input copy. Enough to
// run the exact reverse pass (ReLU derivative is recoverable from the
// post-activation sign).
struct MlpCache {
  std::vector<std::vector<double>> act;
};

// Writes the output into `out` (stack of affine+ReLU, linear last layer).
void mlp_forward(const Mlp& net, std::span<const double> input, MlpCache& cache,
                 std::span<double> out);
std::vector<double> mlp_forward(const Mlp& net, std::span<const double> input);

// Gradients w.r.t. every parameter and w.r.t. the input vector. The input
// gradient is what lets the denoising chain backpropagate across steps.
struct GradientBundle {
  std::vector<std::vector<double>> gw;
  std::vector<std::vector<double>> gb;
  std::vector<double> ginput;

  void resize_like(const Mlp& net);
  void set_zero();
  void add(const GradientBundle& other);
  void scale(double s);
};

// Reverse pass for the cached forward. When `accumulate` is set the
// parameter gradients are added into `grads` (the chain backward calls
// this once per denoising step); the input gradient is always overwritten.
void mlp_backward(const Mlp& net, const MlpCache& cache,
                  std::span<const double> output_grad, GradientBundle& grads,
                  bool accumulate = false);

struct AdamState {
  std::vector<std::vector<double>> mw, vw, mb, vb;
  long step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

AdamState make_adam(const Mlp& net, double lr);
void adam_step(Mlp& net, const GradientBundle& grads, AdamState& state);

// target <- tau * online + (1 - tau) * target, entrywise.
void soft_update(Mlp& target, const Mlp& online, double tau);

Mlp copy_params(const Mlp& src);

// Snapshot format: u32 version, u32 layer count, u32 dims[layers+1],
// then per layer the weights (row-major) and biases as f64.
void save_params(const Mlp& net, const std::string& path);
Mlp load_params(const std::string& path);

}  // namespace ladts
