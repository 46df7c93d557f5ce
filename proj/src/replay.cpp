#include "ladts/replay.hpp"

#include <stdexcept>

namespace ladts {

ReplayBuffer::ReplayBuffer(size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw std::invalid_argument("ReplayBuffer: capacity must be > 0");
  items_.reserve(capacity_);
}

void ReplayBuffer::push(Transition t) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
  } else {
    items_[next_] = std::move(t);
  }
  next_ = (next_ + 1) % capacity_;
  ++pushed_;
}

const Transition& ReplayBuffer::at(size_t logical) const {
  if (logical >= items_.size()) throw std::out_of_range("ReplayBuffer::at");
  if (items_.size() < capacity_) return items_[logical];
  return items_[(next_ + logical) % capacity_];
}

std::vector<const Transition*> ReplayBuffer::sample(int k, Rng& rng) const {
  if (k < 1) throw std::invalid_argument("ReplayBuffer::sample: k must be >= 1");
  if (items_.size() < static_cast<size_t>(k))
    throw std::runtime_error("ReplayBuffer::sample: not enough transitions buffered");
  std::vector<const Transition*> batch(k);
  for (int i = 0; i < k; ++i)
    batch[i] = &items_[static_cast<size_t>(rng.uniform_int(0, static_cast<int>(items_.size()) - 1))];
  return batch;
}

}  // namespace ladts
