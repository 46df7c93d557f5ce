#include "ladts/policies.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ladts {

const char* method_name(Method m) {
  switch (m) {
    case Method::lad: return "lad";
    case Method::dqn: return "dqn";
    case Method::sac: return "sac";
    case Method::d2sac: return "d2sac";
    case Method::opt: return "opt";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  if (name == "lad") return Method::lad;
  if (name == "dqn") return Method::dqn;
  if (name == "sac") return Method::sac;
  if (name == "d2sac") return Method::d2sac;
  if (name == "opt") return Method::opt;
  throw std::invalid_argument("unknown method: " + name);
}

void SchedulerPolicy::feedback(const Observation&, const Task&, const Action&,
                               double, const TaskContext&) {}
TrainMetrics SchedulerPolicy::on_slot_end(int) { return {}; }
void SchedulerPolicy::on_episode_end() {}
void SchedulerPolicy::save(const std::string&) const {}
void SchedulerPolicy::load(const std::string&) {}
const ReplayBuffer* SchedulerPolicy::replay(int) const { return nullptr; }

Action opt_select(const Task& task, const Environment& env) {
  const int n = env.config().num_nodes;
  int best = 0;
  double best_delay = env.service_delay(task, Action{0, n});
  for (int b = 1; b < n; ++b) {
    const double d = env.service_delay(task, Action{b, n});
    if (d < best_delay) {
      best_delay = d;
      best = b;
    }
  }
  return Action{best, n};
}

namespace {

// stream tags for per-seed substreams
constexpr uint64_t kNetStream = 0x100;
constexpr uint64_t kDecisionStream = 0x200;
constexpr uint64_t kLatentStream = 0x300;

struct PendingTransition {
  bool armed = false;   // select() happened, waiting for reward
  bool ready = false;   // reward received, waiting for the next observation
  Observation s;
  std::vector<double> latent;
  Action a;
  double reward = 0.0;
};

class OptPolicy final : public SchedulerPolicy {
 public:
  const char* name() const override { return "opt"; }
  Action select(const Observation&, const Task& task,
                const TaskContext& ctx) override {
    if (!ctx.env) throw std::invalid_argument("opt policy needs environment access");
    return opt_select(task, *ctx.env);
  }
};

// Shared machinery for lad / d2sac / sac: per-node trainer with the
// deferred transition assembly.
class SacFamilyPolicy final : public SchedulerPolicy {
 public:
  explicit SacFamilyPolicy(const PolicyConfig& cfg)
      : cfg_(cfg), sched_(build_schedule(cfg.denoise_steps, cfg.beta_min, cfg.beta_max)) {
    const bool diffusion = cfg.method != Method::sac;
    const auto kind = diffusion ? ActorModel::Kind::diffusion : ActorModel::Kind::dense;
    per_bs_.reserve(cfg.num_nodes);
    for (int b = 0; b < cfg.num_nodes; ++b) {
      PerBs p;
      Rng net_rng(derive_seed(cfg.seed, kNetStream, b));
      p.nets = make_sac_nets(kind, cfg.obs_dim, cfg.num_nodes, cfg.hidden,
                             cfg.embed_dim, sched_, cfg.hp, net_rng);
      p.rng = Rng(derive_seed(cfg.seed, kDecisionStream, b));
      p.buffer = ReplayBuffer(cfg.hp.replay_capacity);
      per_bs_.push_back(std::move(p));
    }
    Rng latent_rng(derive_seed(cfg.seed, kLatentStream));
    if (cfg.method == Method::lad) {
      store_ = std::make_unique<LatentStore>(cfg.num_nodes, cfg.latent_slots,
                                             cfg.num_nodes, latent_rng);
    } else if (cfg.method == Method::d2sac) {
      fresh_rng_ = latent_rng;
    }
  }

  const char* name() const override { return method_name(cfg_.method); }

  Action select(const Observation& obs, const Task& task,
                const TaskContext& ctx) override {
    PerBs& p = per_bs_[ctx.bs];

    std::vector<double> latent(cfg_.num_nodes, 0.0);
    if (cfg_.method == Method::lad) {
      const auto x = store_->fetch(ctx.bs, task.arrival_index);
      latent.assign(x.begin(), x.end());
    } else if (cfg_.method == Method::d2sac) {
      for (auto& v : latent) v = fresh_rng_.normal();
    }

    complete_pending(p, obs, latent, /*done=*/false);

    const auto& actor = p.nets.serving;
    std::vector<double> noise(actor.noise_len());
    for (auto& v : noise) v = p.rng.normal();
    ActorEval eval;
    actor_eval(actor, obs.normalized, latent, noise, eval);

    if (cfg_.method == Method::lad)
      store_->update(ctx.bs, task.arrival_index, eval.dist.source_latent);

    const SelectMode mode = (ctx.training || !cfg_.eval_greedy)
                                ? SelectMode::sample
                                : SelectMode::argmax;
    const Action a = select_action(eval.dist, mode, p.rng);

    p.pending.s = obs;
    p.pending.latent = std::move(latent);
    p.pending.a = a;
    p.pending.armed = true;
    p.pending.ready = false;
    return a;
  }

  void feedback(const Observation&, const Task&, const Action&, double reward,
                const TaskContext& ctx) override {
    PerBs& p = per_bs_[ctx.bs];
    if (!p.pending.armed) return;
    p.pending.reward = reward;
    p.pending.ready = true;
  }

  TrainMetrics on_slot_end(int bs) override {
    PerBs& p = per_bs_[bs];
    return train_step(p.buffer, p.nets, cfg_.hp, p.rng, cfg_.batch_mode);
  }

  void on_episode_end() override {
    for (auto& p : per_bs_) {
      if (p.pending.ready) {
        // terminal tuple: no bootstrap, so the next-state fields just echo
        // the decision's own observation/latent
        const Observation s_copy = p.pending.s;
        const std::vector<double> latent_copy = p.pending.latent;
        complete_pending(p, s_copy, latent_copy, /*done=*/true);
      }
      p.pending = PendingTransition{};
    }
  }

  void save(const std::string& dir) const override {
    for (int b = 0; b < cfg_.num_nodes; ++b) {
      const auto& n = per_bs_[b].nets;
      const std::string prefix = dir + "/" + std::to_string(b) + "_";
      save_params(n.actor.params(), prefix + "actor.ckpt");
      save_params(n.serving.params(), prefix + "serving.ckpt");
      save_params(n.critic1, prefix + "critic1.ckpt");
      save_params(n.critic2, prefix + "critic2.ckpt");
      save_params(n.target1, prefix + "target1.ckpt");
      save_params(n.target2, prefix + "target2.ckpt");
    }
  }

  void load(const std::string& dir) override {
    for (int b = 0; b < cfg_.num_nodes; ++b) {
      auto& n = per_bs_[b].nets;
      const std::string prefix = dir + "/" + std::to_string(b) + "_";
      n.actor.params() = load_params(prefix + "actor.ckpt");
      n.serving.params() = load_params(prefix + "serving.ckpt");
      n.critic1 = load_params(prefix + "critic1.ckpt");
      n.critic2 = load_params(prefix + "critic2.ckpt");
      n.target1 = load_params(prefix + "target1.ckpt");
      n.target2 = load_params(prefix + "target2.ckpt");
    }
  }

  const ReplayBuffer* replay(int bs) const override { return &per_bs_[bs].buffer; }

  const SacNets& nets(int bs) const { return per_bs_[bs].nets; }

 private:
  struct PerBs {
    SacNets nets;
    ReplayBuffer buffer{1000};
    Rng rng;
    PendingTransition pending;
  };

  void complete_pending(PerBs& p, const Observation& s_next,
                        const std::vector<double>& latent_next, bool done) {
    if (!p.pending.ready) return;
    Transition t;
    t.s = std::move(p.pending.s);
    t.latent = std::move(p.pending.latent);
    t.a = p.pending.a;
    t.reward = p.pending.reward;
    t.s_next = s_next;
    t.latent_next = latent_next;
    t.done = done;
    p.buffer.push(std::move(t));
    p.pending.armed = false;
    p.pending.ready = false;
  }

  PolicyConfig cfg_;
  BetaSchedule sched_;
  std::vector<PerBs> per_bs_;
  std::unique_ptr<LatentStore> store_;  // lad only
  Rng fresh_rng_;                       // d2sac only
};

class DqnPolicy final : public SchedulerPolicy {
 public:
  explicit DqnPolicy(const PolicyConfig& cfg) : cfg_(cfg) {
    per_bs_.reserve(cfg.num_nodes);
    const int dims[] = {cfg.obs_dim, cfg.hidden, cfg.hidden, cfg.num_nodes};
    for (int b = 0; b < cfg.num_nodes; ++b) {
      PerBs p;
      Rng net_rng(derive_seed(cfg.seed, kNetStream, b));
      p.qnet = make_mlp(dims, net_rng);
      p.qtarget = p.qnet;
      p.opt = make_adam(p.qnet, cfg.hp.lr_critic);
      p.rng = Rng(derive_seed(cfg.seed, kDecisionStream, b));
      p.buffer = ReplayBuffer(cfg.hp.replay_capacity);
      per_bs_.push_back(std::move(p));
    }
  }

  const char* name() const override { return "dqn"; }

  Action select(const Observation& obs, const Task&,
                const TaskContext& ctx) override {
    PerBs& p = per_bs_[ctx.bs];
    complete_pending(p, obs, /*done=*/false);

    int idx;
    const double eps = ctx.training ? epsilon(p.train_steps) : 0.0;
    if (eps > 0.0 && p.rng.uniform01() < eps) {
      idx = p.rng.uniform_int(0, cfg_.num_nodes - 1);
    } else {
      const auto q = mlp_forward(p.qnet, obs.normalized);
      idx = 0;
      for (int j = 1; j < cfg_.num_nodes; ++j)
        if (q[j] > q[idx]) idx = j;
    }
    const Action a{idx, cfg_.num_nodes};
    p.pending.s = obs;
    p.pending.latent.assign(cfg_.num_nodes, 0.0);
    p.pending.a = a;
    p.pending.armed = true;
    p.pending.ready = false;
    return a;
  }

  void feedback(const Observation&, const Task&, const Action&, double reward,
                const TaskContext& ctx) override {
    PerBs& p = per_bs_[ctx.bs];
    if (!p.pending.armed) return;
    p.pending.reward = reward;
    p.pending.ready = true;
  }

  TrainMetrics on_slot_end(int bs) override {
    PerBs& p = per_bs_[bs];
    TrainMetrics m;
    if (p.buffer.size() <= static_cast<size_t>(cfg_.hp.train_threshold) ||
        p.buffer.size() < static_cast<size_t>(cfg_.hp.batch))
      return m;
    const Batch batch = p.buffer.sample(cfg_.hp.batch, p.rng);
    auto r = dqn_loss(batch, p.qnet, p.qtarget, cfg_.hp.gamma, cfg_.batch_mode);
    adam_step(p.qnet, r.grads, p.opt);
    p.train_steps += 1;
    if (p.train_steps % cfg_.dqn_copy_interval == 0) p.qtarget = p.qnet;
    m.trained = true;
    m.critic_loss1 = r.loss;
    return m;
  }

  void on_episode_end() override {
    for (auto& p : per_bs_) {
      if (p.pending.ready) {
        const Observation s_copy = p.pending.s;
        complete_pending(p, s_copy, /*done=*/true);
      }
      p.pending = PendingTransition{};
    }
  }

  void save(const std::string& dir) const override {
    for (int b = 0; b < cfg_.num_nodes; ++b) {
      const std::string prefix = dir + "/" + std::to_string(b) + "_";
      save_params(per_bs_[b].qnet, prefix + "qnet.ckpt");
      save_params(per_bs_[b].qtarget, prefix + "qtarget.ckpt");
    }
  }

  void load(const std::string& dir) override {
    for (int b = 0; b < cfg_.num_nodes; ++b) {
      const std::string prefix = dir + "/" + std::to_string(b) + "_";
      per_bs_[b].qnet = load_params(prefix + "qnet.ckpt");
      per_bs_[b].qtarget = load_params(prefix + "qtarget.ckpt");
    }
  }

  const ReplayBuffer* replay(int bs) const override { return &per_bs_[bs].buffer; }

  double epsilon(long step) const {
    const double span = cfg_.dqn_eps_fraction *
                        static_cast<double>(std::max(1L, cfg_.planned_train_steps));
    const double frac = std::min(1.0, static_cast<double>(step) / span);
    return cfg_.dqn_eps_start + frac * (cfg_.dqn_eps_final - cfg_.dqn_eps_start);
  }

 private:
  struct PerBs {
    Mlp qnet, qtarget;
    AdamState opt;
    ReplayBuffer buffer{1000};
    Rng rng;
    PendingTransition pending;
    long train_steps = 0;
  };

  void complete_pending(PerBs& p, const Observation& s_next, bool done) {
    if (!p.pending.ready) return;
    Transition t;
    t.s = std::move(p.pending.s);
    t.latent = std::move(p.pending.latent);
    t.a = p.pending.a;
    t.reward = p.pending.reward;
    t.s_next = s_next;
    t.latent_next.assign(cfg_.num_nodes, 0.0);
    t.done = done;
    p.buffer.push(std::move(t));
    p.pending.armed = false;
    p.pending.ready = false;
  }

  PolicyConfig cfg_;
  std::vector<PerBs> per_bs_;
};

}  // namespace

DqnResult dqn_loss(const Batch& batch, const Mlp& qnet, const Mlp& qtarget,
                   double gamma, BatchMode mode) {
  const int k_count = static_cast<int>(batch.size());
  const int act_dim = qnet.output_dim();

  std::vector<double> losses(k_count);
  std::vector<GradientBundle> slots(k_count);
  for_each_sample(k_count, mode, [&](int k) {
    const Transition& tr = *batch[k];
    double y = tr.reward;
    if (!tr.done) {
      const auto qn = mlp_forward(qtarget, tr.s_next.normalized);
      double mx = qn[0];
      for (int j = 1; j < act_dim; ++j) mx = std::max(mx, qn[j]);
      y += gamma * mx;
    }
    MlpCache cache;
    std::vector<double> q(act_dim);
    mlp_forward(qnet, tr.s.normalized, cache, q);
    const double res = q[tr.a.index] - y;
    losses[k] = res * res;
    std::vector<double> og(act_dim, 0.0);
    og[tr.a.index] = 2.0 * res / k_count;
    mlp_backward(qnet, cache, og, slots[k]);
  });

  DqnResult r;
  r.grads.resize_like(qnet);
  for (int k = 0; k < k_count; ++k) {
    r.loss += losses[k];
    r.grads.add(slots[k]);
  }
  r.loss /= k_count;
  return r;
}

std::unique_ptr<SchedulerPolicy> make_policy(const PolicyConfig& cfg) {
  switch (cfg.method) {
    case Method::opt:
      return std::make_unique<OptPolicy>();
    case Method::dqn:
      return std::make_unique<DqnPolicy>(cfg);
    case Method::lad:
    case Method::sac:
    case Method::d2sac:
      return std::make_unique<SacFamilyPolicy>(cfg);
  }
  throw std::invalid_argument("make_policy: unknown method");
}

}  // namespace ladts
