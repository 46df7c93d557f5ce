#pragma once

#include <cstdint>
#include <vector>

#include "ladts/env.hpp"
#include "ladts/rng.hpp"

namespace ladts {

// Extended replay tuple: the latent that seeded the decision chain (and
// the one the next decision consumed) ride along with the usual fields.
struct Transition {
  Observation s;
  std::vector<double> latent;       // x_I
  Action a;
  double reward = 0.0;
  Observation s_next;
  std::vector<double> latent_next;  // x_I consumed by the next decision
  bool done = false;
};

// Fixed-capacity FIFO ring.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(size_t capacity = 1000);

  void push(Transition t);
  size_t size() const { return items_.size(); }
  size_t capacity() const { return capacity_; }
  uint64_t total_pushed() const { return pushed_; }
  const Transition& at(size_t logical) const;  // 0 = oldest

  // Uniform with replacement; throws std::runtime_error when size < k.
  std::vector<const Transition*> sample(int k, Rng& rng) const;

 private:
  size_t capacity_;
  std::vector<Transition> items_;
  size_t next_ = 0;
  uint64_t pushed_ = 0;
};

}  // namespace ladts
