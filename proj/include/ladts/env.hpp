#pragma once

#include <span>
#include <vector>

#include "ladts/rng.hpp"

namespace ladts {

// Environment ranges. Rates are bits/s, capacities cycles/s, data sizes
// bits. rho is the per-denoising-step cycle cost, stored in rho_scale
// units (default mega-cycles) so the sampled range stays [100, 300].
struct EnvConfig {
  int num_nodes = 20;
  int horizon = 60;
  double slot_seconds = 1.0;
  int tasks_min = 1;
  int tasks_max = 50;
  double data_bits_min = 2e6;
  double data_bits_max = 5e6;
  double result_bits_min = 0.6e6;
  double result_bits_max = 1.0e6;
  int quality_min = 1;
  int quality_max = 15;
  double rho_min = 100.0;
  double rho_max = 300.0;
  double rho_scale = 1e6;
  double rate_min = 400e6;
  double rate_max = 500e6;
  double capacity_min = 10e9;
  double capacity_max = 50e9;

  void validate() const;  // throws std::invalid_argument
  double max_workload_cycles() const { return rho_max * rho_scale * quality_max; }
};

// One generation request: compute cost is cycles_per_step * quality_steps,
// independent of the payload size.
struct Task {
  long id = 0;
  int origin_bs = 0;
  int slot = 0;
  int arrival_index = 0;
  double data_bits = 0.0;
  double result_bits = 0.0;
  int quality_steps = 1;
  double cycles_per_step = 0.0;

  double workload_cycles() const { return cycles_per_step * quality_steps; }
};

struct EdgeNode {
  int id = 0;
  double capacity_hz = 0.0;
};

// Per-slot transfer rates for every ordered node pair; sampled once per
// slot, symmetric per pair (one draw covers both directions and the
// user-side hop), including the self pair.
struct LinkRates {
  int nodes = 0;
  std::vector<double> rates;  // row-major [from][to]

  double rate(int from, int to) const {
    return rates[static_cast<size_t>(from) * nodes + to];
  }
};

struct SlotClock {
  int t = 1;
  double slot_seconds = 1.0;
  int horizon = 1;
};

// backlog[b]      q_{t-1,b}: cycles carried over from previous slots
// within_slot[b]  q^bef accumulator: cycles accepted earlier this slot
struct SlotState {
  std::vector<double> backlog;
  std::vector<double> within_slot;
};

struct Observation {
  std::vector<double> raw;         // [d, rho*z, q_{t-1,1..B}]
  std::vector<double> normalized;  // same layout, scaled to ~[0,1]
};

// One-hot placement decision, stored as the selected node index.
struct Action {
  int index = -1;
  int size = 0;

  bool valid() const { return size > 0 && index >= 0 && index < size; }
  std::vector<double> one_hot() const {
    std::vector<double> v(size, 0.0);
    if (valid()) v[index] = 1.0;
    return v;
  }
};

struct StepOutcome {
  double service_delay_s = 0.0;
  double reward = 0.0;  // always -service_delay_s
  int target_node = -1;
};

// Samples the slot's task arrivals: each BS receives N ~ U[tasks_min,
// tasks_max] tasks with fields drawn uniformly from the config ranges.
std::vector<std::vector<Task>> generate_tasks(int slot, Rng& rng,
                                              const EnvConfig& cfg,
                                              long* next_task_id = nullptr);

LinkRates sample_links(Rng& rng, const EnvConfig& cfg);

// Time-slotted offloading environment. Node capacities are drawn once at
// construction; link rates and arrivals are redrawn every slot. All
// sampling comes from the internal stream, so a (seed, config) pair fixes
// the whole trace regardless of the scheduling policy (decisions never
// consume from this stream).
class Environment {
 public:
  Environment(const EnvConfig& cfg, uint64_t seed);

  // Zeroes queues and rewinds the clock; the arrival stream continues.
  void reset();

  // Draws links and arrivals for the current slot.
  void begin_slot();

  const std::vector<Task>& tasks_at(int bs) const { return slot_tasks_[bs]; }

  Observation observe(const Task& task) const;
  double waiting_time(int target) const;
  double service_delay(const Task& task, const Action& action) const;
  StepOutcome apply_decision(const Task& task, const Action& action);

  // Queue drain q_t = max(q_{t-1} + accepted - f*Delta, 0), then clears the
  // within-slot accumulators and advances the clock.
  void advance_slot();

  bool episode_done() const { return clock_.t > cfg_.horizon; }

  const EnvConfig& config() const { return cfg_; }
  const std::vector<EdgeNode>& nodes() const { return nodes_; }
  const LinkRates& links() const { return links_; }
  const SlotState& state() const { return state_; }
  SlotState& mutable_state() { return state_; }
  const SlotClock& clock() const { return clock_; }
  double mean_capacity_hz() const { return mean_capacity_; }

 private:
  EnvConfig cfg_;
  Rng rng_;
  std::vector<EdgeNode> nodes_;
  LinkRates links_;
  SlotState state_;
  SlotClock clock_;
  std::vector<std::vector<Task>> slot_tasks_;
  double mean_capacity_ = 0.0;
  long next_task_id_ = 0;
};

}  // namespace ladts
