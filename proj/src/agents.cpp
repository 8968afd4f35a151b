#include "risbc/agents.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "risbc/errors.hpp"

namespace risbc {

namespace {

using nlohmann::json;

constexpr const char* kAgentFormat = "risbc-agent/1";

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << v;
  return os.str();
}

json phase_space_json(const SystemConfig& cfg) {
  return json{{"k_ris", cfg.k_ris}, {"phase_levels", cfg.phase_levels}};
}

json alloc_space_json(const SystemConfig& cfg) {
  return json{{"alpha_grid", cfg.alpha_grid},
              {"beta_grid", cfg.beta_grid},
              {"m_tags", cfg.m_tags},
              {"power_grid", cfg.power_grid}};
}

json agent_json(const char* kind, json space, const SystemConfig& cfg, const BranchingQAgent& core) {
  return json{{"format", kAgentFormat},
              {"kind", kind},
              {"action_space", std::move(space)},
              {"config_hash", hex(config_hash(cfg))},
              {"branches", core.branches()},
              {"branch_width", core.width()},
              {"normalizer", core.normalizer().to_json()},
              {"network", core.net().to_json()}};
}

BranchingQAgent core_from_json(const json& doc, const char* kind, const json& expected_space,
                               std::size_t input_width, std::size_t branches, std::size_t width,
                               const LearningParams& learning) {
  try {
    if (doc.at("format") != kAgentFormat) throw ArtifactError("unknown agent checkpoint format");
    if (doc.at("kind") != kind)
      throw ArtifactError(std::string("checkpoint holds a '") + doc.at("kind").get<std::string>() +
                          "' agent, expected '" + kind + "'");
    if (doc.at("action_space") != expected_space)
      throw ArtifactError(std::string(kind) + " checkpoint action space " + doc.at("action_space").dump() +
                          " does not match config " + expected_space.dump());
    Mlp net = Mlp::from_json(doc.at("network"));
    if (net.input_width() != input_width || net.output_width() != branches * width ||
        doc.at("branches").get<std::size_t>() != branches || doc.at("branch_width").get<std::size_t>() != width)
      throw ArtifactError(std::string(kind) + " checkpoint network shape does not match config");
    FeatureNormalizer norm = FeatureNormalizer::from_json(doc.at("normalizer"));
    if (norm.width() != input_width) throw ArtifactError(std::string(kind) + " normalizer width mismatch");
    return BranchingQAgent(std::move(net), std::move(norm), branches, width, learning);
  } catch (const json::exception& e) {
    throw ArtifactError(std::string("malformed agent checkpoint: ") + e.what());
  }
}

std::vector<std::size_t> net_dims(std::size_t input, const std::vector<std::size_t>& hidden, std::size_t output) {
  std::vector<std::size_t> dims{input};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(output);
  return dims;
}

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw NumericalError(std::string("non-finite ") + what);
}

}  // namespace

// ---------------------------------------------------------------------------
// FeatureNormalizer

FeatureNormalizer::FeatureNormalizer(std::size_t width, std::size_t warmup)
    : warmup_(warmup), frozen_(warmup == 0), mean_(width, 0.0), m2_(width, 0.0) {}

void FeatureNormalizer::observe(std::span<const double> x) {
  if (frozen_) return;
  if (x.size() != mean_.size()) throw ShapeError("normalizer: feature width mismatch");
  ++count_;
  const double n = static_cast<double>(count_);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double delta = x[i] - mean_[i];
    mean_[i] += delta / n;
    m2_[i] += delta * (x[i] - mean_[i]);
  }
  if (count_ >= warmup_) frozen_ = true;
}

double FeatureNormalizer::variance(std::size_t i) const {
  if (count_ == 0) return 1.0;
  return m2_.at(i) / static_cast<double>(count_);
}

void FeatureNormalizer::transform_into(std::span<const double> x, std::span<double> out) const {
  if (x.size() != mean_.size() || out.size() != mean_.size())
    throw ShapeError("normalizer: feature width mismatch");
  for (std::size_t i = 0; i < x.size(); ++i)
    out[i] = (x[i] - mean_[i]) / std::sqrt(std::max(variance(i), kVarianceFloor));
}

std::vector<double> FeatureNormalizer::transform(std::span<const double> x) const {
  std::vector<double> out(x.size());
  transform_into(x, out);
  return out;
}

json FeatureNormalizer::to_json() const {
  return json{{"warmup", warmup_}, {"count", count_}, {"frozen", frozen_}, {"mean", mean_}, {"m2", m2_}};
}

FeatureNormalizer FeatureNormalizer::from_json(const json& doc) {
  const auto mean = doc.at("mean").get<std::vector<double>>();
  FeatureNormalizer norm(mean.size(), doc.at("warmup").get<std::size_t>());
  norm.count_ = doc.at("count").get<std::size_t>();
  norm.frozen_ = doc.at("frozen").get<bool>();
  norm.mean_ = mean;
  norm.m2_ = doc.at("m2").get<std::vector<double>>();
  if (norm.m2_.size() != norm.mean_.size()) throw ArtifactError("normalizer mean/m2 width mismatch");
  return norm;
}

// ---------------------------------------------------------------------------
// Action selection

std::size_t greedy_index(std::span<const double> q) {
  if (q.empty()) throw ShapeError("greedy_index: empty Q-vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < q.size(); ++i) {
    if (q[i] > q[best]) best = i;
  }
  return best;
}

std::size_t epsilon_greedy(std::span<const double> q, std::size_t width, double eps, Rng& rng) {
  if (rng.uniform() < eps) return rng.uniform_index(width);
  if (q.size() != width) throw ShapeError("epsilon_greedy: Q-vector width mismatch");
  return greedy_index(q);
}

std::vector<int> epsilon_greedy_branches(std::span<const double> q, std::size_t branches, std::size_t width,
                                         double eps, Rng& rng) {
  std::vector<int> choice(branches);
  for (std::size_t b = 0; b < branches; ++b) {
    const auto head = q.empty() ? std::span<const double>{} : q.subspan(b * width, width);
    choice[b] = static_cast<int>(epsilon_greedy(head, width, eps, rng));
  }
  return choice;
}

// ---------------------------------------------------------------------------
// AllocSpace

AllocSpace AllocSpace::from(const SystemConfig& cfg) {
  return AllocSpace{cfg.alpha_grid.size(), cfg.beta_grid.size(), cfg.m_tags,
                    cfg.power_grid.empty() ? std::size_t{1} : cfg.power_grid.size()};
}

AllocAction AllocSpace::decode(std::size_t id) const {
  if (id >= size()) throw ActionError("joint action id " + std::to_string(id) + " out of range");
  AllocAction a;
  a.power_idx = id % powers;
  id /= powers;
  a.tag_idx = id % tags;
  id /= tags;
  a.beta_idx = id % betas;
  a.alpha_idx = id / betas;
  return a;
}

std::size_t AllocSpace::encode(const AllocAction& a) const {
  if (a.alpha_idx >= alphas || a.beta_idx >= betas || a.tag_idx >= tags || a.power_idx >= powers)
    throw ActionError("allocation action out of range");
  return ((a.alpha_idx * betas + a.beta_idx) * tags + a.tag_idx) * powers + a.power_idx;
}

// ---------------------------------------------------------------------------
// Features

std::vector<double> phase_features(const ChannelRealization& chan) {
  if (chan.h_br.size() != chan.h_ru.size()) throw ShapeError("phase_features: RIS vector lengths differ");
  std::vector<double> x;
  x.reserve(2 * chan.h_br.size());
  for (std::size_t k = 0; k < chan.h_br.size(); ++k) {
    const cplx c = chan.cascade(k);
    x.push_back(std::abs(c));
    x.push_back(std::arg(c) / std::numbers::pi);
  }
  return x;
}

std::vector<double> alloc_features(const ChannelRealization& chan, const PhaseAction& phases) {
  std::vector<double> x;
  x.reserve(2 + 2 * chan.f.size());
  x.push_back(std::norm(chan.h1));
  x.push_back(std::norm(effective_ris_channel(chan.h_br, chan.h_ru, phases)));
  for (std::size_t m = 0; m < chan.f.size(); ++m) {
    x.push_back(std::norm(chan.f[m]));
    x.push_back(std::norm(chan.g[m]));
  }
  return x;
}

// ---------------------------------------------------------------------------
// BranchingQAgent

BranchingQAgent::BranchingQAgent(std::size_t input_width, std::size_t branches, std::size_t width,
                                 const std::vector<std::size_t>& hidden, const LearningParams& learning,
                                 Rng& init_rng)
    : BranchingQAgent(Mlp(net_dims(input_width, hidden, branches * width), init_rng,
                          AdamParams{.learning_rate = learning.learning_rate}),
                      FeatureNormalizer(input_width, learning.normalizer_warmup), branches, width, learning) {}

BranchingQAgent::BranchingQAgent(Mlp net, FeatureNormalizer normalizer, std::size_t branches, std::size_t width,
                                 const LearningParams& learning)
    : net_(std::move(net)),
      normalizer_(std::move(normalizer)),
      buffer_(learning.buffer_capacity),
      branches_(branches),
      width_(width),
      minibatch_(learning.minibatch) {
  if (net_.output_width() != branches_ * width_) throw ShapeError("Q-network output width != branches * width");
  if (normalizer_.width() != net_.input_width()) throw ShapeError("normalizer width != network input width");
}

std::vector<double> BranchingQAgent::q_values(std::span<const double> raw_features) const {
  return net_.forward(normalizer_.transform(raw_features));
}

std::vector<int> BranchingQAgent::act(std::span<const double> raw_features, double eps, Rng& rng) const {
  std::vector<double> q;
  if (eps < 1.0) q = q_values(raw_features);
  return epsilon_greedy_branches(q, branches_, width_, eps, rng);
}

void BranchingQAgent::remember(Transition t) {
  if (t.features.size() != net_.input_width()) throw ShapeError("transition feature width mismatch");
  if (t.actions.size() != branches_) throw ShapeError("transition must carry one action per branch");
  for (int a : t.actions) {
    if (a < 0 || static_cast<std::size_t>(a) >= width_) throw ActionError("transition action out of range");
  }
  require_finite(t.reward, "reward");
  if (!t.branch_rewards.empty() && t.branch_rewards.size() != branches_)
    throw ShapeError("transition must carry one reward per branch or none");
  for (double r : t.branch_rewards) require_finite(r, "branch reward");
  buffer_.push(std::move(t));
}

double BranchingQAgent::learn(Rng& rng) {
  const auto batch = buffer_.sample(minibatch_, rng);
  const auto n = static_cast<Eigen::Index>(batch.size());
  const auto in = static_cast<Eigen::Index>(net_.input_width());
  const auto out = static_cast<Eigen::Index>(net_.output_width());
  Matrix x(n, in);
  Matrix target = Matrix::Zero(n, out);
  Matrix mask = Matrix::Zero(n, out);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Transition& t = *batch[static_cast<std::size_t>(i)];
    normalizer_.transform_into(t.features, std::span<double>(x.row(i).data(), static_cast<std::size_t>(in)));
    for (std::size_t b = 0; b < branches_; ++b) {
      const auto col = static_cast<Eigen::Index>(b * width_ + static_cast<std::size_t>(t.actions[b]));
      target(i, col) = t.branch_rewards.empty() ? t.reward : t.branch_rewards[b];
      mask(i, col) = 1.0;
    }
  }
  auto [loss, grads] = net_.backward_masked(x, target, mask);
  require_finite(loss, "training loss");
  net_.adam_step(grads);
  return loss;
}

// ---------------------------------------------------------------------------
// PhaseAgent / AllocAgent

PhaseAgent::PhaseAgent(const SystemConfig& cfg, Rng& init_rng)
    : core_(2 * cfg.k_ris, cfg.k_ris, cfg.phase_levels, cfg.learning.phase_hidden, cfg.learning, init_rng),
      levels_(static_cast<int>(cfg.phase_levels)) {}

PhaseAction PhaseAgent::act(std::span<const double> raw_features, double eps, Rng& rng) const {
  return PhaseAction{core_.act(raw_features, eps, rng), levels_};
}

void PhaseAgent::remember(std::vector<double> raw_features, const PhaseAction& phases, double reward) {
  core_.remember(Transition{std::move(raw_features), phases.levels, reward, {}});
}

void PhaseAgent::remember(std::vector<double> raw_features, const PhaseAction& phases,
                          std::vector<double> element_rewards) {
  double total = 0.0;
  for (double r : element_rewards) total += r;
  core_.remember(Transition{std::move(raw_features), phases.levels, total, std::move(element_rewards)});
}

json PhaseAgent::to_json(const SystemConfig& cfg) const {
  return agent_json("phase", phase_space_json(cfg), cfg, core_);
}

PhaseAgent PhaseAgent::from_json(const json& doc, const SystemConfig& cfg) {
  return PhaseAgent(core_from_json(doc, "phase", phase_space_json(cfg), 2 * cfg.k_ris, cfg.k_ris, cfg.phase_levels,
                                   cfg.learning),
                    static_cast<int>(cfg.phase_levels));
}

AllocAgent::AllocAgent(const SystemConfig& cfg, Rng& init_rng)
    : core_(2 + 2 * cfg.m_tags, 1, AllocSpace::from(cfg).size(), cfg.learning.alloc_hidden, cfg.learning, init_rng),
      space_(AllocSpace::from(cfg)) {}

AllocAction AllocAgent::act(std::span<const double> raw_features, double eps, Rng& rng) const {
  return space_.decode(static_cast<std::size_t>(core_.act(raw_features, eps, rng).front()));
}

void AllocAgent::remember(std::vector<double> raw_features, const AllocAction& alloc, double reward) {
  core_.remember(Transition{std::move(raw_features), {static_cast<int>(space_.encode(alloc))}, reward, {}});
}

json AllocAgent::to_json(const SystemConfig& cfg) const {
  return agent_json("alloc", alloc_space_json(cfg), cfg, core_);
}

AllocAgent AllocAgent::from_json(const json& doc, const SystemConfig& cfg) {
  const AllocSpace space = AllocSpace::from(cfg);
  return AllocAgent(
      core_from_json(doc, "alloc", alloc_space_json(cfg), 2 + 2 * cfg.m_tags, 1, space.size(), cfg.learning),
      space);
}

// ---------------------------------------------------------------------------
// Training

double reward(const LinkMetrics& metrics, Objective mode, double penalty) {
  return objective(metrics, mode, penalty);
}

double real_projection_reward(const ChannelRealization& chan, const PhaseAction& phases) {
  const double bound = aligned_phase_bound(chan.h_br, chan.h_ru);
  if (bound <= 0.0) return 0.0;
  return effective_ris_channel(chan.h_br, chan.h_ru, phases).real() / bound;
}

std::vector<double> element_projection_rewards(const ChannelRealization& chan, const PhaseAction& phases) {
  phases.check(chan.h_br.size(), static_cast<std::size_t>(phases.num_levels));
  std::vector<double> out(chan.h_br.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = (chan.cascade(k) * std::polar(1.0, phases.radians(k))).real();
  return out;
}

double epsilon_at(const LearningParams& learning, std::size_t sample, std::size_t total) {
  const double decay_len = learning.epsilon_decay_fraction * static_cast<double>(total);
  const double s = static_cast<double>(sample);
  if (s >= decay_len) return learning.epsilon_end;
  return learning.epsilon_start + (learning.epsilon_end - learning.epsilon_start) * (s / decay_len);
}

TrainingResult train(const SystemConfig& cfg, Objective mode, std::uint64_t seed, const TrainingObserver& observer) {
  cfg.validate();
  const LearningParams& lp = cfg.learning;
  Rng env_rng(derive_seed(seed, 0));
  Rng explore_rng(derive_seed(seed, 1));
  Rng init_rng(derive_seed(seed, 2));
  Rng batch_rng(derive_seed(seed, 3));

  PhaseAgent phase(cfg, init_rng);
  AllocAgent alloc(cfg, init_rng);
  std::vector<TrainingLogRow> log;

  const std::size_t total = lp.train_samples;
  double window_reward = 0.0;
  std::size_t window_feasible = 0;
  std::size_t window_count = 0;

  for (std::size_t i = 0; i < total; ++i) {
    const double eps = epsilon_at(lp, i, total);
    const ChannelRealization chan = sample_realization(cfg, env_rng);

    std::vector<double> pf = phase_features(chan);
    phase.core().observe(pf);
    const PhaseAction phases = phase.act(pf, eps, explore_rng);

    std::vector<double> af = alloc_features(chan, phases);
    alloc.core().observe(af);
    const AllocAction action = alloc.act(af, eps, explore_rng);

    const LinkMetrics metrics = evaluate(cfg, chan, phases, action);
    const double r = reward(metrics, mode, lp.penalty);
    require_finite(r, "reward");

    switch (lp.phase_reward) {
      case PhaseReward::shared:
        phase.remember(std::move(pf), phases, r);
        break;
      case PhaseReward::real_projection:
        phase.remember(std::move(pf), phases, real_projection_reward(chan, phases));
        break;
      case PhaseReward::element_projection:
        phase.remember(std::move(pf), phases, element_projection_rewards(chan, phases));
        break;
    }
    alloc.remember(std::move(af), action, r);

    if ((i + 1) % lp.phase_train_every == 0 && phase.core().ready()) phase.core().learn(batch_rng);
    if ((i + 1) % lp.alloc_train_every == 0 && alloc.core().ready()) alloc.core().learn(batch_rng);

    window_reward += r;
    window_feasible += metrics.feasible ? 1 : 0;
    ++window_count;
    if ((i + 1) % lp.log_every == 0 || i + 1 == total) {
      TrainingLogRow row{i + 1, eps, window_reward / static_cast<double>(window_count),
                         static_cast<double>(window_feasible) / static_cast<double>(window_count)};
      log.push_back(row);
      if (observer) observer(row);
      window_reward = 0.0;
      window_feasible = 0;
      window_count = 0;
    }
  }
  return TrainingResult{std::move(phase), std::move(alloc), std::move(log)};
}

JointDecision greedy_decision(const PhaseAgent& phase, const AllocAgent& alloc, const ChannelRealization& chan) {
  Rng unused(0);
  PhaseAction phases = phase.act(phase_features(chan), 0.0, unused);
  AllocAction action = alloc.act(alloc_features(chan, phases), 0.0, unused);
  return {std::move(phases), action};
}

}  // namespace risbc
