#pragma once

#include <span>
#include <vector>

#include "ladts/env.hpp"
#include "ladts/mlp.hpp"
#include "ladts/rng.hpp"
#include "ladts/schedule.hpp"

namespace ladts {

// The update rule writes the noise term as (beta_tilde_i / 2) * eps;
// sqrt_var swaps in the usual sqrt(beta_tilde_i) scaling for comparison.
enum class NoiseCoeff { half_var, sqrt_var };

// Recycled latents need a bound or the per-step 1/sqrt(lambda) rescale
// blows them up across slots. A hard clamp kills every gradient once a
// coordinate saturates (untrained predictors saturate all of them), so the
// bound is identity on [-core, core] with a small leak outside: values stay
// within ~[-5.3, 5.3] under the worst-case rescale and the chain stays
// trainable everywhere.
inline constexpr double kLatentCore = 4.0;
inline constexpr double kLatentLeak = 0.02;

inline double bound_latent(double u) {
  if (u > kLatentCore) return kLatentCore + kLatentLeak * (u - kLatentCore);
  if (u < -kLatentCore) return -kLatentCore + kLatentLeak * (u + kLatentCore);
  return u;
}

inline double bound_latent_grad(double u) {
  return (u > kLatentCore || u < -kLatentCore) ? kLatentLeak : 1.0;
}

// Sin/cos position code of the step index: out[2k] = sin(i * w_k),
// out[2k+1] = cos(i * w_k) with w_k = 10000^(-2k/dim).
void sinusoidal_encode(int i, int dim, std::span<double> out);
std::vector<double> sinusoidal_encode(int i, int dim);

// Noise-prediction network. Input is [observation | latent | step code],
// output is the predicted noise over the action dimensions.
struct DiffusionActorNet {
  Mlp net;
  int obs_dim = 0;
  int act_dim = 0;
  int embed_dim = 16;

  int input_dim() const { return obs_dim + act_dim + embed_dim; }
};

DiffusionActorNet make_diffusion_actor(int obs_dim, int act_dim, int embed_dim,
                                       int hidden, Rng& rng);

// Everything the reverse pass needs, recorded per denoising step in
// generation order (i = I ... 1).
struct ChainStep {
  int i = 0;
  std::vector<double> x_in;      // x_i entering the step
  MlpCache cache;                // forward cache of the eps predictor
  std::vector<double> eps_pred;  // predicted noise
  std::vector<double> preclamp;  // x_{i-1} before the clamp
};

struct ChainTrace {
  std::vector<ChainStep> steps;
  std::vector<double> x0;
};

// One reverse update:
//   x_{i-1} = (x_i - beta_i / sqrt(1 - lambda_bar_i) * eps_theta) / sqrt(lambda_i)
//             + coeff(i) * noise
// followed by the clamp. `noise` is caller-provided so tests can run the
// step deterministically.
std::vector<double> denoise_step(std::span<const double> x_i, int i,
                                 std::span<const double> obs_norm,
                                 const DiffusionActorNet& actor,
                                 const BetaSchedule& sched,
                                 std::span<const double> noise,
                                 NoiseCoeff coeff = NoiseCoeff::half_var,
                                 ChainStep* record = nullptr);

// Runs the full chain i = I..1. `noise` holds I*act_dim values, step I
// first; pass an all-zero buffer for a deterministic chain.
std::vector<double> reverse_chain(std::span<const double> x_init,
                                  std::span<const double> obs_norm,
                                  const DiffusionActorNet& actor,
                                  const BetaSchedule& sched,
                                  std::span<const double> noise,
                                  NoiseCoeff coeff = NoiseCoeff::half_var,
                                  ChainTrace* trace = nullptr);

// Convenience overload drawing the per-step noise from `rng`.
std::vector<double> reverse_chain(std::span<const double> x_init,
                                  std::span<const double> obs_norm,
                                  const DiffusionActorNet& actor,
                                  const BetaSchedule& sched, Rng& rng,
                                  NoiseCoeff coeff = NoiseCoeff::half_var,
                                  ChainTrace* trace = nullptr);

// Backpropagates d(loss)/d(x0) through the recorded chain, accumulating
// parameter gradients of the eps predictor into `grads`. Optionally
// returns the gradient w.r.t. the initial latent.
void chain_backward(const ChainTrace& trace, const DiffusionActorNet& actor,
                    const BetaSchedule& sched, std::span<const double> dx0,
                    GradientBundle& grads, NoiseCoeff coeff = NoiseCoeff::half_var,
                    std::vector<double>* dx_init = nullptr);

struct ActionDistribution {
  std::vector<double> probs;
  std::vector<double> source_latent;  // the x0 the probs came from
};

// Max-subtracted softmax; throws std::domain_error on non-finite input.
ActionDistribution action_probs(std::span<const double> x0);

// Given d(loss)/d(probs), returns d(loss)/d(logits) for the softmax.
void softmax_backward(std::span<const double> probs,
                      std::span<const double> dprobs, std::span<double> dlogits);

enum class SelectMode { argmax, sample };

Action select_action(const ActionDistribution& dist, SelectMode mode, Rng& rng);

// Inverse-CDF pick with a pre-drawn uniform; keeps batched kernels free of
// in-loop RNG calls.
int categorical_pick(std::span<const double> probs, double u);

// Per-BS array of recycled action-probability latents, one row per
// within-slot arrival index, Gaussian-initialized.
class LatentStore {
 public:
  LatentStore(int num_bs, int slots, int dim, Rng& rng);

  std::span<const double> fetch(int bs, int n) const;
  void update(int bs, int n, std::span<const double> x0);

  int slots() const { return slots_; }
  int dim() const { return dim_; }

 private:
  size_t offset(int bs, int n) const;
  int num_bs_ = 0;
  int slots_ = 0;
  int dim_ = 0;
  std::vector<double> data_;
};

}  // namespace ladts
