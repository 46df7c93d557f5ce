#include "ladts/sac.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ladts {

double entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs)
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

void actor_eval(const ActorModel& actor, std::span<const double> obs_norm,
                std::span<const double> latent, std::span<const double> noise,
                ActorEval& out) {
  if (actor.kind == ActorModel::Kind::diffusion) {
    const auto x0 = reverse_chain(latent, obs_norm, actor.diff, actor.sched,
                                  noise, actor.noise_coeff, &out.trace);
    out.dist = action_probs(x0);
  } else {
    std::vector<double> logits(actor.dense.output_dim());
    mlp_forward(actor.dense, obs_norm, out.cache, logits);
    out.dist = action_probs(logits);
  }
}

void actor_backward(const ActorModel& actor, const ActorEval& eval,
                    std::span<const double> obs_norm,
                    std::span<const double> dlogits, GradientBundle& grads) {
  if (actor.kind == ActorModel::Kind::diffusion) {
    (void)obs_norm;
    chain_backward(eval.trace, actor.diff, actor.sched, dlogits, grads,
                   actor.noise_coeff);
  } else {
    mlp_backward(actor.dense, eval.cache, dlogits, grads, /*accumulate=*/true);
  }
}

double critic_value(const Mlp& critic, std::span<const double> obs_norm,
                    int action_index, int act_dim) {
  std::vector<double> in(obs_norm.size() + act_dim, 0.0);
  std::copy(obs_norm.begin(), obs_norm.end(), in.begin());
  in[obs_norm.size() + action_index] = 1.0;
  return mlp_forward(critic, in)[0];
}

SacNets make_sac_nets(ActorModel::Kind kind, int obs_dim, int act_dim,
                      int hidden, int embed_dim, const BetaSchedule& sched,
                      const Hyperparams& hp, Rng& rng) {
  SacNets n;
  n.actor.kind = kind;
  n.actor.sched = sched;
  n.actor.noise_coeff = hp.noise_coeff;
  if (kind == ActorModel::Kind::diffusion) {
    n.actor.diff = make_diffusion_actor(obs_dim, act_dim, embed_dim, hidden, rng);
  } else {
    const int dims[] = {obs_dim, hidden, hidden, act_dim};
    n.actor.dense = make_mlp(dims, rng);
  }
  n.serving = n.actor;
  const int cdims[] = {obs_dim + act_dim, hidden, hidden, 1};
  n.critic1 = make_mlp(cdims, rng);
  n.critic2 = make_mlp(cdims, rng);
  n.target1 = n.critic1;
  n.target2 = n.critic2;
  n.actor_opt = make_adam(n.actor.params(), hp.lr_actor);
  n.critic1_opt = make_adam(n.critic1, hp.lr_critic);
  n.critic2_opt = make_adam(n.critic2, hp.lr_critic);
  n.alpha = hp.alpha_init;
  return n;
}

std::vector<double> q_target(const Batch& batch, const ActorModel& actor,
                             const Mlp& target1, const Mlp& target2,
                             const Hyperparams& hp, double alpha, Rng& rng,
                             BatchMode mode) {
  const int k_count = static_cast<int>(batch.size());
  const int nlen = actor.noise_len();
  const bool paper = hp.target_style == TargetStyle::paper;
  const int act_dim = actor.act_dim();

  // all randomness is drawn up front so the parallel map is pure
  std::vector<double> noise(static_cast<size_t>(k_count) * nlen);
  for (auto& v : noise) v = rng.normal();
  std::vector<double> us;
  if (paper) {
    us.resize(k_count);
    for (auto& u : us) u = rng.uniform01();
  }

  std::vector<double> y(k_count);
  std::vector<ActorEval> evals(k_count);
  for_each_sample(k_count, mode, [&](int k) {
    const Transition& tr = *batch[k];
    if (tr.done) {
      y[k] = tr.reward;
      return;
    }
    ActorEval& ev = evals[k];
    actor_eval(actor, tr.s_next.normalized, tr.latent_next,
               std::span<const double>(noise).subspan(static_cast<size_t>(k) * nlen, nlen),
               ev);
    const double h = entropy(ev.dist.probs);
    if (paper) {
      const int a = categorical_pick(ev.dist.probs, us[k]);
      const double qmin =
          std::min(critic_value(target1, tr.s_next.normalized, a, act_dim),
                   critic_value(target2, tr.s_next.normalized, a, act_dim));
      y[k] = tr.reward + hp.gamma * (ev.dist.probs[a] * qmin + alpha * h);
    } else {
      double expected = 0.0;
      for (int a = 0; a < act_dim; ++a) {
        const double qmin =
            std::min(critic_value(target1, tr.s_next.normalized, a, act_dim),
                     critic_value(target2, tr.s_next.normalized, a, act_dim));
        expected += ev.dist.probs[a] * qmin;
      }
      y[k] = tr.reward + hp.gamma * (expected + alpha * h);
    }
  });
  return y;
}

CriticResult critic_loss(const Batch& batch, const Mlp& critic,
                         std::span<const double> targets, BatchMode mode) {
  const int k_count = static_cast<int>(batch.size());
  if (targets.size() != static_cast<size_t>(k_count))
    throw std::invalid_argument("critic_loss: targets size mismatch");

  std::vector<double> losses(k_count);
  std::vector<GradientBundle> slots(k_count);
  for_each_sample(k_count, mode, [&](int k) {
    const Transition& tr = *batch[k];
    std::vector<double> in(tr.s.normalized.size() + tr.a.size, 0.0);
    std::copy(tr.s.normalized.begin(), tr.s.normalized.end(), in.begin());
    in[tr.s.normalized.size() + tr.a.index] = 1.0;
    MlpCache cache;
    double q = 0.0;
    mlp_forward(critic, in, cache, std::span<double>(&q, 1));
    const double res = q - targets[k];
    losses[k] = res * res;
    const double og = 2.0 * res / k_count;
    mlp_backward(critic, cache, std::span<const double>(&og, 1), slots[k]);
  });

  CriticResult r;
  r.grads.resize_like(critic);
  for (int k = 0; k < k_count; ++k) {
    r.loss += losses[k];
    r.grads.add(slots[k]);
  }
  r.loss /= k_count;
  return r;
}

ActorResult actor_loss(const Batch& batch, const ActorModel& actor,
                       const Mlp& critic1, const Mlp& critic2,
                       const Hyperparams& hp, double alpha,
                       std::span<const double> chain_noise, BatchMode mode) {
  const int k_count = static_cast<int>(batch.size());
  const int nlen = actor.noise_len();
  const int act_dim = actor.act_dim();
  if (chain_noise.size() != static_cast<size_t>(k_count) * nlen)
    throw std::invalid_argument("actor_loss: chain_noise size mismatch");
  const bool paper = hp.actor_style == ActorStyle::paper;

  std::vector<double> losses(k_count), ents(k_count);
  std::vector<GradientBundle> slots(k_count);
  std::vector<ActorEval> evals(k_count);
  for_each_sample(k_count, mode, [&](int k) {
    const Transition& tr = *batch[k];
    ActorEval& ev = evals[k];
    actor_eval(actor, tr.s.normalized, tr.latent,
               chain_noise.subspan(static_cast<size_t>(k) * nlen, nlen), ev);
    const auto& p = ev.dist.probs;
    const double h = entropy(p);
    ents[k] = h;

    std::vector<double> dp(act_dim), dx(act_dim);
    if (paper) {
      const int a = tr.a.index;
      const double qe =
          std::min(critic_value(critic1, tr.s.normalized, a, act_dim),
                   critic_value(critic2, tr.s.normalized, a, act_dim));
      const double res = -alpha * h - p[a] * qe;
      losses[k] = res * res;
      const double scale = 2.0 * res / k_count;
      for (int m = 0; m < act_dim; ++m) {
        const double dlog = std::log(std::max(p[m], 1e-300)) + 1.0;
        dp[m] = scale * (alpha * dlog - (m == a ? qe : 0.0));
      }
    } else {
      double loss = 0.0;
      for (int m = 0; m < act_dim; ++m) {
        const double qmin =
            std::min(critic_value(critic1, tr.s.normalized, m, act_dim),
                     critic_value(critic2, tr.s.normalized, m, act_dim));
        const double lp = std::log(std::max(p[m], 1e-300));
        loss += p[m] * (alpha * lp - qmin);
        dp[m] = (alpha * lp + alpha - qmin) / k_count;
      }
      losses[k] = loss;
    }
    softmax_backward(p, dp, dx);
    slots[k].resize_like(actor.params());
    actor_backward(actor, ev, tr.s.normalized, dx, slots[k]);
  });

  ActorResult r;
  r.grads.resize_like(actor.params());
  for (int k = 0; k < k_count; ++k) {
    r.loss += losses[k];
    r.mean_entropy += ents[k];
    r.grads.add(slots[k]);
  }
  r.loss /= k_count;
  r.mean_entropy /= k_count;
  return r;
}

double alpha_update(double alpha, double batch_entropy, const Hyperparams& hp) {
  const double grad = -batch_entropy - hp.target_entropy;
  return std::max(hp.alpha_min, alpha - hp.lr_alpha * grad);
}

TrainMetrics train_step(ReplayBuffer& buffer, SacNets& nets,
                        const Hyperparams& hp, Rng& rng, BatchMode mode) {
  TrainMetrics m;
  m.alpha = nets.alpha;
  if (buffer.size() <= static_cast<size_t>(hp.train_threshold) ||
      buffer.size() < static_cast<size_t>(hp.batch))
    return m;

  const Batch batch = buffer.sample(hp.batch, rng);
  const auto targets = q_target(batch, nets.actor, nets.target1, nets.target2,
                                hp, nets.alpha, rng, mode);

  auto c1 = critic_loss(batch, nets.critic1, targets, mode);
  adam_step(nets.critic1, c1.grads, nets.critic1_opt);
  auto c2 = critic_loss(batch, nets.critic2, targets, mode);
  adam_step(nets.critic2, c2.grads, nets.critic2_opt);

  std::vector<double> noise(static_cast<size_t>(hp.batch) * nets.actor.noise_len());
  for (auto& v : noise) v = rng.normal();
  auto ar = actor_loss(batch, nets.actor, nets.critic1, nets.critic2, hp,
                       nets.alpha, noise, mode);
  adam_step(nets.actor.params(), ar.grads, nets.actor_opt);

  nets.alpha = alpha_update(nets.alpha, ar.mean_entropy, hp);
  soft_update(nets.target1, nets.critic1, hp.tau);
  soft_update(nets.target2, nets.critic2, hp.tau);
  nets.serving.params() = copy_params(nets.actor.params());

  m.trained = true;
  m.critic_loss1 = c1.loss;
  m.critic_loss2 = c2.loss;
  m.actor_loss = ar.loss;
  m.alpha = nets.alpha;
  m.mean_entropy = ar.mean_entropy;
  return m;
}

}  // namespace ladts
