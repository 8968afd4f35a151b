#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "json.hpp"
#include "risbc/channel.hpp"
#include "risbc/config.hpp"
#include "risbc/link.hpp"
#include "risbc/mlp.hpp"
#include "risbc/replay.hpp"
#include "risbc/rng.hpp"

namespace risbc {

// Running z-score (Welford). Observations stop counting once frozen; the
// normalizer freezes itself after `warmup` observations.
class FeatureNormalizer {
 public:
  static constexpr double kVarianceFloor = 1e-8;

  FeatureNormalizer(std::size_t width, std::size_t warmup);

  void observe(std::span<const double> x);
  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }
  std::size_t count() const { return count_; }
  std::size_t width() const { return mean_.size(); }

  double mean(std::size_t i) const { return mean_.at(i); }
  double variance(std::size_t i) const;

  std::vector<double> transform(std::span<const double> x) const;
  void transform_into(std::span<const double> x, std::span<double> out) const;

  nlohmann::json to_json() const;
  static FeatureNormalizer from_json(const nlohmann::json& doc);

 private:
  std::size_t warmup_;
  std::size_t count_ = 0;
  bool frozen_ = false;
  std::vector<double> mean_;
  std::vector<double> m2_;
};

// Index of the largest entry; ties go to the lowest index.
std::size_t greedy_index(std::span<const double> q);

// One uniform draw decides explore vs exploit; exploring draws a uniform
// index. q may be empty when eps >= 1.
std::size_t epsilon_greedy(std::span<const double> q, std::size_t width, double eps, Rng& rng);

// Independent epsilon-greedy per branch; branch b owns q[b*width, (b+1)*width).
std::vector<int> epsilon_greedy_branches(std::span<const double> q, std::size_t branches, std::size_t width,
                                         double eps, Rng& rng);

// Joint allocation action ids, alpha-major, then beta, then tag, then power:
//   id = ((alpha_idx * |beta| + beta_idx) * M + tag_idx) * |power| + power_idx
// |power| is 1 when no power grid is configured.
struct AllocSpace {
  std::size_t alphas = 1;
  std::size_t betas = 1;
  std::size_t tags = 1;
  std::size_t powers = 1;

  static AllocSpace from(const SystemConfig& cfg);
  std::size_t size() const { return alphas * betas * tags * powers; }
  AllocAction decode(std::size_t id) const;
  std::size_t encode(const AllocAction& a) const;
};

// (|h_br,k h_ru,k|, arg(h_br,k h_ru,k) / pi) for every element, interleaved.
std::vector<double> phase_features(const ChannelRealization& chan);

// (|h1|^2, |h2_eff|^2, then |f_m|^2, |g_m|^2 per tag).
std::vector<double> alloc_features(const ChannelRealization& chan, const PhaseAction& phases);

// Q-network with `branches` independent heads of `width` outputs each,
// trained on a masked MSE that regresses every taken action's output onto the
// reward. A single-branch agent is an ordinary flat DQN head.
class BranchingQAgent {
 public:
  BranchingQAgent(std::size_t input_width, std::size_t branches, std::size_t width,
                  const std::vector<std::size_t>& hidden, const LearningParams& learning, Rng& init_rng);
  BranchingQAgent(Mlp net, FeatureNormalizer normalizer, std::size_t branches, std::size_t width,
                  const LearningParams& learning);

  std::size_t branches() const { return branches_; }
  std::size_t width() const { return width_; }

  std::vector<double> q_values(std::span<const double> raw_features) const;
  std::vector<int> act(std::span<const double> raw_features, double eps, Rng& rng) const;

  void observe(std::span<const double> raw_features) { normalizer_.observe(raw_features); }
  void remember(Transition t);
  bool ready() const { return buffer_.ready(minibatch_); }

  // One Adam step on a uniformly sampled minibatch. Returns the loss.
  double learn(Rng& rng);

  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }
  FeatureNormalizer& normalizer() { return normalizer_; }
  const FeatureNormalizer& normalizer() const { return normalizer_; }
  const ReplayBuffer& buffer() const { return buffer_; }

 private:
  Mlp net_;
  FeatureNormalizer normalizer_;
  ReplayBuffer buffer_;
  std::size_t branches_;
  std::size_t width_;
  std::size_t minibatch_;
};

// Chooses the K quantized RIS phases from the cascade channels.
// Network: [2K, hidden..., K*L].
class PhaseAgent {
 public:
  PhaseAgent(const SystemConfig& cfg, Rng& init_rng);

  PhaseAction act(std::span<const double> raw_features, double eps, Rng& rng) const;
  void remember(std::vector<double> raw_features, const PhaseAction& phases, double reward);
  // One reward per element; see element_projection_rewards.
  void remember(std::vector<double> raw_features, const PhaseAction& phases, std::vector<double> element_rewards);

  BranchingQAgent& core() { return core_; }
  const BranchingQAgent& core() const { return core_; }

  nlohmann::json to_json(const SystemConfig& cfg) const;
  // Throws ArtifactError when the checkpoint's action space differs from cfg.
  static PhaseAgent from_json(const nlohmann::json& doc, const SystemConfig& cfg);

 private:
  PhaseAgent(BranchingQAgent core, int levels) : core_(std::move(core)), levels_(levels) {}

  BranchingQAgent core_;
  int levels_;
};

// Chooses (alpha1, beta, tag[, power]) as one joint action id.
// Network: [2 + 2M, hidden..., |alpha| * |beta| * M * |power|].
class AllocAgent {
 public:
  AllocAgent(const SystemConfig& cfg, Rng& init_rng);

  AllocAction act(std::span<const double> raw_features, double eps, Rng& rng) const;
  void remember(std::vector<double> raw_features, const AllocAction& alloc, double reward);

  const AllocSpace& space() const { return space_; }
  BranchingQAgent& core() { return core_; }
  const BranchingQAgent& core() const { return core_; }

  nlohmann::json to_json(const SystemConfig& cfg) const;
  static AllocAgent from_json(const nlohmann::json& doc, const SystemConfig& cfg);

 private:
  AllocAgent(BranchingQAgent core, AllocSpace space) : core_(std::move(core)), space_(space) {}

  BranchingQAgent core_;
  AllocSpace space_;
};

// The system objective: EE or SE when feasible, the configured penalty
// otherwise.
double reward(const LinkMetrics& metrics, Objective mode, double penalty);

// Phase-agent reward that fixes the global phase reference: the projection
// of h2_eff on the real axis over the coherent bound. Under uniformly random
// phases elsewhere its expectation separates per element, each element
// contributing |c_k| cos(theta_k + arg c_k) / bound, and its maximiser also
// attains |h2_eff| = bound.
double real_projection_reward(const ChannelRealization& chan, const PhaseAction& phases);

// Per-element share of Re(h2_eff): Re(h_br,k e^{j theta_k} h_ru,k). Element
// k's entry is the change in Re(h2_eff) when that element is switched off,
// so each branch sees only its own contribution and none of the other
// branches' exploration noise. The entries sum to Re(h2_eff).
std::vector<double> element_projection_rewards(const ChannelRealization& chan, const PhaseAction& phases);

// Linear decay from epsilon_start to epsilon_end over the first
// epsilon_decay_fraction of `total` samples, then exactly epsilon_end.
double epsilon_at(const LearningParams& learning, std::size_t sample, std::size_t total);

struct TrainingLogRow {
  std::size_t sample_index = 0;  // samples processed so far
  double epsilon = 0.0;
  double mean_reward_window = 0.0;
  double feasible_fraction = 0.0;
};

struct TrainingResult {
  PhaseAgent phase;
  AllocAgent alloc;
  std::vector<TrainingLogRow> log;
};

using TrainingObserver = std::function<void(const TrainingLogRow&)>;

// Sequential training over cfg.learning.train_samples i.i.d. realizations.
// Streams derived from `seed`: 0 environment, 1 exploration, 2 network
// initialisation, 3 minibatch sampling.
TrainingResult train(const SystemConfig& cfg, Objective mode, std::uint64_t seed,
                     const TrainingObserver& observer = {});

// Greedy (eps = 0) joint decision of a trained pair.
struct JointDecision {
  PhaseAction phases;
  AllocAction alloc;
};
JointDecision greedy_decision(const PhaseAgent& phase, const AllocAgent& alloc, const ChannelRealization& chan);

}  // namespace risbc
