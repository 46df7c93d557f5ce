#pragma once

#include <span>
#include <vector>

#include "ladts/batch.hpp"
#include "ladts/diffusion.hpp"
#include "ladts/mlp.hpp"
#include "ladts/replay.hpp"
#include "ladts/rng.hpp"
#include "ladts/schedule.hpp"

namespace ladts {

// Q-target: the written formula weights the sampled next action's minimum
// target value by its probability; `expectation` swaps in the full
// expectation over actions for comparison.
enum class TargetStyle { paper, expectation };

// The actor objective squares the residual (-alpha H - pi(a) Q_eval);
// `standard` swaps in the usual discrete soft-actor objective.
enum class ActorStyle { paper, standard };

struct Hyperparams {
  double gamma = 0.95;
  double tau = 0.005;
  double alpha_init = 0.05;
  double target_entropy = -1.0;
  int batch = 64;
  double lr_actor = 1e-4;
  double lr_critic = 1e-3;
  double lr_alpha = 3e-4;
  int replay_capacity = 1000;
  int train_threshold = 300;  // train only once strictly more are stored
  int episodes = 60;
  double alpha_min = 1e-4;
  TargetStyle target_style = TargetStyle::paper;
  ActorStyle actor_style = ActorStyle::paper;
  NoiseCoeff noise_coeff = NoiseCoeff::half_var;
};

// H = -sum p ln p, with 0 ln 0 = 0.
double entropy(std::span<const double> probs);

// Policy head shared by the diffusion-chain actors and the plain softmax
// actor: both map (observation, latent) to pre-softmax logits.
struct ActorModel {
  enum class Kind { diffusion, dense };
  Kind kind = Kind::diffusion;
  DiffusionActorNet diff;
  Mlp dense;
  BetaSchedule sched;  // diffusion only
  NoiseCoeff noise_coeff = NoiseCoeff::half_var;

  Mlp& params() { return kind == Kind::diffusion ? diff.net : dense; }
  const Mlp& params() const { return kind == Kind::diffusion ? diff.net : dense; }
  int act_dim() const { return kind == Kind::diffusion ? diff.act_dim : dense.output_dim(); }
  // normals consumed by one evaluation
  int noise_len() const { return kind == Kind::diffusion ? sched.steps * diff.act_dim : 0; }
};

struct ActorEval {
  ActionDistribution dist;
  ChainTrace trace;  // diffusion path
  MlpCache cache;    // dense path
};

void actor_eval(const ActorModel& actor, std::span<const double> obs_norm,
                std::span<const double> latent, std::span<const double> noise,
                ActorEval& out);

// dlogits -> parameter gradients (accumulated into grads).
void actor_backward(const ActorModel& actor, const ActorEval& eval,
                    std::span<const double> obs_norm,
                    std::span<const double> dlogits, GradientBundle& grads);

// Scalar critic over [observation | one-hot action].
double critic_value(const Mlp& critic, std::span<const double> obs_norm,
                    int action_index, int act_dim);

struct SacNets {
  ActorModel actor;    // trained actor
  ActorModel serving;  // decision copy, refreshed after every train step
  Mlp critic1, critic2;
  Mlp target1, target2;
  AdamState actor_opt, critic1_opt, critic2_opt;
  double alpha = 0.05;
};

SacNets make_sac_nets(ActorModel::Kind kind, int obs_dim, int act_dim,
                      int hidden, int embed_dim, const BetaSchedule& sched,
                      const Hyperparams& hp, Rng& rng);

using Batch = std::vector<const Transition*>;

// Bootstrap regression targets. Per sample: run the actor on the stored
// next state/latent, sample the next action, and combine reward, the
// minimum target-critic value, and the entropy bonus. Terminal samples
// return the bare reward.
std::vector<double> q_target(const Batch& batch, const ActorModel& actor,
                             const Mlp& target1, const Mlp& target2,
                             const Hyperparams& hp, double alpha, Rng& rng,
                             BatchMode mode);

struct CriticResult {
  double loss = 0.0;
  GradientBundle grads;
};

// Mean squared error against precomputed targets (constants: no gradient
// reaches the target networks).
CriticResult critic_loss(const Batch& batch, const Mlp& critic,
                         std::span<const double> targets, BatchMode mode);

struct ActorResult {
  double loss = 0.0;
  double mean_entropy = 0.0;
  GradientBundle grads;
};

// Actor objective and its gradient through the softmax and (for diffusion
// actors) the whole denoising chain. `chain_noise` supplies K*noise_len
// pre-drawn normals so the computation is a deterministic function of its
// arguments; critics are frozen.
ActorResult actor_loss(const Batch& batch, const ActorModel& actor,
                       const Mlp& critic1, const Mlp& critic2,
                       const Hyperparams& hp, double alpha,
                       std::span<const double> chain_noise, BatchMode mode);

// One descent step on (-H - target_entropy) * alpha at lr_alpha, clamped
// to alpha_min.
double alpha_update(double alpha, double batch_entropy, const Hyperparams& hp);

struct TrainMetrics {
  bool trained = false;
  double critic_loss1 = 0.0;
  double critic_loss2 = 0.0;
  double actor_loss = 0.0;
  double alpha = 0.0;
  double mean_entropy = 0.0;
};

// Full update in the fixed order: sample, targets, critic steps, actor
// step, temperature step, soft target update, serving copy. No-op while
// the buffer holds <= train_threshold transitions.
TrainMetrics train_step(ReplayBuffer& buffer, SacNets& nets,
                        const Hyperparams& hp, Rng& rng, BatchMode mode);

}  // namespace ladts
