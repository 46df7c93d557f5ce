#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ladts/env.hpp"
#include "ladts/sac.hpp"

namespace ladts {

enum class Method { lad, dqn, sac, d2sac, opt };

const char* method_name(Method m);
Method parse_method(const std::string& name);

struct PolicyConfig {
  Method method = Method::lad;
  int num_nodes = 0;
  int obs_dim = 0;
  int latent_slots = 0;  // max arrivals per slot, sizes the latent store
  int hidden = 20;
  int embed_dim = 16;
  int denoise_steps = 5;
  double beta_min = 0.1;
  double beta_max = 10.0;
  Hyperparams hp;
  uint64_t seed = 1;
  bool eval_greedy = true;
  BatchMode batch_mode = BatchMode::serial;
  // DQN exploration and target handling
  double dqn_eps_start = 1.0;
  double dqn_eps_final = 0.01;
  double dqn_eps_fraction = 0.5;  // of planned train steps
  int dqn_copy_interval = 200;
  long planned_train_steps = 0;   // episodes * horizon, per node
};

struct TaskContext {
  int bs = 0;
  int arrival_index = 0;
  Environment* env = nullptr;
  bool training = true;
};

// Shared scheduler surface: every variant decides per task and may learn
// from the transitions it assembles. Trainable variants complete the
// pending transition for a node when its next decision arrives (the next
// observation and the next consumed latent only exist at that point).
class SchedulerPolicy {
 public:
  virtual ~SchedulerPolicy() = default;
  virtual const char* name() const = 0;
  virtual Action select(const Observation& obs, const Task& task,
                        const TaskContext& ctx) = 0;
  virtual void feedback(const Observation& obs, const Task& task,
                        const Action& a, double reward, const TaskContext& ctx);
  virtual TrainMetrics on_slot_end(int bs);
  virtual void on_episode_end();
  virtual void save(const std::string& dir) const;
  virtual void load(const std::string& dir);
  // read-only view of a node's experience pool; null for learning-free variants
  virtual const ReplayBuffer* replay(int bs) const;
};

std::unique_ptr<SchedulerPolicy> make_policy(const PolicyConfig& cfg);

// Myopic oracle: evaluates the true current-queue delay of every placement
// and takes the argmin, lowest index on ties.
Action opt_select(const Task& task, const Environment& env);

struct DqnResult {
  double loss = 0.0;
  GradientBundle grads;
};

// Squared TD error (1/K) sum (Q(s)[a] - y)^2 with
// y = r + gamma max_a' Qt(s')[a'], terminal samples bootstrapping nothing.
DqnResult dqn_loss(const Batch& batch, const Mlp& qnet, const Mlp& qtarget,
                   double gamma, BatchMode mode);

}  // namespace ladts
