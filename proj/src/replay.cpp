#include "risbc/replay.hpp"

#include <string>

#include "risbc/errors.hpp"

namespace risbc {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw ShapeError("replay buffer capacity must be positive");
  storage_.reserve(capacity_);
}

void ReplayBuffer::push(Transition t) {
  if (storage_.size() < capacity_) {
    storage_.push_back(std::move(t));
  } else {
    storage_[cursor_] = std::move(t);
  }
  cursor_ = (cursor_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n, Rng& rng) const {
  if (!ready(n))
    throw NotReadyError("requested " + std::to_string(n) + " samples from a buffer holding " +
                        std::to_string(storage_.size()));
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = rng.uniform_index(storage_.size());
  return idx;
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  std::vector<const Transition*> batch;
  batch.reserve(n);
  for (std::size_t i : sample_indices(n, rng)) batch.push_back(&storage_[i]);
  return batch;
}

}  // namespace risbc
