#include "ladts/env.hpp"

#include <algorithm>
#include <stdexcept>

namespace ladts {

namespace {
void check_range(double lo, double hi, const char* what) {
  if (!(lo > 0.0) || lo > hi)
    throw std::invalid_argument(std::string("env config: bad range for ") + what);
}
}  // namespace

void EnvConfig::validate() const {
  if (num_nodes < 1) throw std::invalid_argument("env config: num_nodes must be >= 1");
  if (horizon < 1) throw std::invalid_argument("env config: horizon must be >= 1");
  if (!(slot_seconds > 0.0)) throw std::invalid_argument("env config: slot_seconds must be > 0");
  if (tasks_min < 1 || tasks_min > tasks_max)
    throw std::invalid_argument("env config: bad range for tasks");
  if (quality_min < 1 || quality_min > quality_max)
    throw std::invalid_argument("env config: bad range for quality_steps");
  check_range(data_bits_min, data_bits_max, "data_bits");
  check_range(result_bits_min, result_bits_max, "result_bits");
  check_range(rho_min, rho_max, "rho");
  if (!(rho_scale > 0.0)) throw std::invalid_argument("env config: rho_scale must be > 0");
  check_range(rate_min, rate_max, "rate");
  check_range(capacity_min, capacity_max, "capacity");
}

std::vector<std::vector<Task>> generate_tasks(int slot, Rng& rng,
                                              const EnvConfig& cfg,
                                              long* next_task_id) {
  cfg.validate();
  long id = next_task_id ? *next_task_id : 0;
  std::vector<std::vector<Task>> per_bs(cfg.num_nodes);
  for (int b = 0; b < cfg.num_nodes; ++b) {
    const int n = rng.uniform_int(cfg.tasks_min, cfg.tasks_max);
    per_bs[b].resize(n);
    for (int k = 0; k < n; ++k) {
      Task& t = per_bs[b][k];
      t.id = id++;
      t.origin_bs = b;
      t.slot = slot;
      t.arrival_index = k;
      t.data_bits = rng.uniform(cfg.data_bits_min, cfg.data_bits_max);
      t.result_bits = rng.uniform(cfg.result_bits_min, cfg.result_bits_max);
      t.quality_steps = rng.uniform_int(cfg.quality_min, cfg.quality_max);
      t.cycles_per_step = rng.uniform(cfg.rho_min, cfg.rho_max) * cfg.rho_scale;
    }
  }
  if (next_task_id) *next_task_id = id;
  return per_bs;
}

LinkRates sample_links(Rng& rng, const EnvConfig& cfg) {
  LinkRates links;
  links.nodes = cfg.num_nodes;
  links.rates.assign(static_cast<size_t>(cfg.num_nodes) * cfg.num_nodes, 0.0);
  for (int a = 0; a < cfg.num_nodes; ++a) {
    for (int b = a; b < cfg.num_nodes; ++b) {
      const double r = rng.uniform(cfg.rate_min, cfg.rate_max);
      links.rates[static_cast<size_t>(a) * cfg.num_nodes + b] = r;
      links.rates[static_cast<size_t>(b) * cfg.num_nodes + a] = r;
    }
  }
  return links;
}

Environment::Environment(const EnvConfig& cfg, uint64_t seed)
    : cfg_(cfg), rng_(derive_seed(seed, 0x656e76)) {
  cfg_.validate();
  nodes_.resize(cfg_.num_nodes);
  double sum = 0.0;
  for (int b = 0; b < cfg_.num_nodes; ++b) {
    nodes_[b].id = b;
    nodes_[b].capacity_hz = rng_.uniform(cfg_.capacity_min, cfg_.capacity_max);
    sum += nodes_[b].capacity_hz;
  }
  mean_capacity_ = sum / cfg_.num_nodes;
  slot_tasks_.resize(cfg_.num_nodes);
  reset();
}

void Environment::reset() {
  state_.backlog.assign(cfg_.num_nodes, 0.0);
  state_.within_slot.assign(cfg_.num_nodes, 0.0);
  clock_ = SlotClock{1, cfg_.slot_seconds, cfg_.horizon};
}

void Environment::begin_slot() {
  links_ = sample_links(rng_, cfg_);
  slot_tasks_ = generate_tasks(clock_.t, rng_, cfg_, &next_task_id_);
}

Observation Environment::observe(const Task& task) const {
  const int b = cfg_.num_nodes;
  Observation obs;
  obs.raw.resize(b + 2);
  obs.normalized.resize(b + 2);
  obs.raw[0] = task.data_bits;
  obs.raw[1] = task.workload_cycles();
  for (int i = 0; i < b; ++i) obs.raw[2 + i] = state_.backlog[i];

  // one slot of mean-capacity work; backlog/scale is the queue's drain time
  // in slots, an O(1) feature for loaded systems
  const double queue_scale = mean_capacity_ * cfg_.slot_seconds;
  obs.normalized[0] = task.data_bits / cfg_.data_bits_max;
  obs.normalized[1] = task.workload_cycles() / cfg_.max_workload_cycles();
  for (int i = 0; i < b; ++i) obs.normalized[2 + i] = state_.backlog[i] / queue_scale;
  return obs;
}

double Environment::waiting_time(int target) const {
  return (state_.backlog[target] + state_.within_slot[target]) /
         nodes_[target].capacity_hz;
}

double Environment::service_delay(const Task& task, const Action& action) const {
  if (!action.valid() || action.size != cfg_.num_nodes)
    throw std::invalid_argument("service_delay: invalid action");
  const int target = action.index;
  const double up = links_.rate(task.origin_bs, target);
  const double down = links_.rate(target, task.origin_bs);
  return task.data_bits / up +
         task.workload_cycles() / nodes_[target].capacity_hz +
         waiting_time(target) +
         task.result_bits / down;
}

StepOutcome Environment::apply_decision(const Task& task, const Action& action) {
  const double delay = service_delay(task, action);
  state_.within_slot[action.index] += task.workload_cycles();
  return StepOutcome{delay, -delay, action.index};
}

void Environment::advance_slot() {
  const double dt = cfg_.slot_seconds;
  for (int b = 0; b < cfg_.num_nodes; ++b) {
    const double q = state_.backlog[b] + state_.within_slot[b] -
                     nodes_[b].capacity_hz * dt;
    state_.backlog[b] = std::max(q, 0.0);
    state_.within_slot[b] = 0.0;
  }
  clock_.t += 1;
}

}  // namespace ladts
