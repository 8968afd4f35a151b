#pragma once

#include <cstddef>
#include <vector>

#include "risbc/rng.hpp"

namespace risbc {

// One contextual-bandit sample. There is no next state: decisions are
// one-step, so the regression target is the reward itself. The allocation
// agent stores one action id; the phase agent stores one level per RIS
// element. When branch_rewards is non-empty, branch b regresses onto
// branch_rewards[b] instead of the shared reward.
struct Transition {
  std::vector<double> features;
  std::vector<int> actions;
  double reward = 0.0;
  std::vector<double> branch_rewards;
};

// Fixed-capacity FIFO ring. Once full, each push overwrites the oldest entry.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);

  // n indices drawn uniformly with replacement from the filled region.
  // Throws NotReadyError when fewer than n transitions are stored.
  std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const;
  std::vector<const Transition*> sample(std::size_t n, Rng& rng) const;

  const Transition& at(std::size_t slot) const { return storage_.at(slot); }
  std::size_t size() const { return storage_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool ready(std::size_t n) const { return storage_.size() >= n; }

 private:
  std::size_t capacity_;
  std::size_t cursor_ = 0;
  std::vector<Transition> storage_;
};

}  // namespace risbc
