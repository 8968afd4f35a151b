#include <cmath>
#include <numbers>

#include "doctest.h"
#include "risbc/agents.hpp"
#include "risbc/errors.hpp"
#include "risbc/oracle.hpp"

using namespace risbc;

namespace {

// Small enough that a full training run takes well under a second.
SystemConfig tiny_config() {
  SystemConfig cfg;
  cfg.k_ris = 3;
  cfg.m_tags = 2;
  cfg.phase_levels = 4;
  cfg.alpha_grid = {0.1, 0.3};
  cfg.beta_grid = {0.4, 0.8};
  auto& l = cfg.learning;
  l.train_samples = 400;
  l.minibatch = 16;
  l.buffer_capacity = 200;
  l.normalizer_warmup = 50;
  l.log_every = 50;
  l.phase_hidden = {16, 8};
  l.alloc_hidden = {16, 8};
  return cfg;
}

// An agent whose Q-values are exactly the output biases.
BranchingQAgent fixed_q_agent(std::size_t inputs, std::size_t branches, std::size_t width,
                              const std::vector<double>& q) {
  Mlp net = Mlp::zeros({inputs, 4, branches * width});
  for (std::size_t i = 0; i < q.size(); ++i) net.biases(1)(static_cast<Eigen::Index>(i)) = q[i];
  return BranchingQAgent(std::move(net), FeatureNormalizer(inputs, 0), branches, width, tiny_config().learning);
}

ChannelRealization single_element(cplx h_br, cplx h_ru) {
  ChannelRealization chan;
  chan.h1 = 1.0;
  chan.h_br = {h_br};
  chan.h_ru = {h_ru};
  chan.f = {1.0};
  chan.g = {1.0};
  return chan;
}

// |count - n p| <= 5 sigma for every category.
void check_uniform(const std::vector<double>& counts, double draws) {
  const double p = 1.0 / static_cast<double>(counts.size());
  const double sigma = std::sqrt(draws * p * (1.0 - p));
  for (double c : counts) CHECK(std::abs(c - draws * p) <= 5.0 * sigma);
}

bool same_parameters(const Mlp& a, const Mlp& b) {
  for (std::size_t l = 0; l < a.num_layers(); ++l) {
    if (a.weights(l) != b.weights(l) || a.biases(l) != b.biases(l)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("phase features of hand-built cascades") {
  auto x = phase_features(single_element(1.0, 1.0));
  CHECK(x == std::vector<double>{1.0, 0.0});
  x = phase_features(single_element(cplx(0.0, 1.0), 1.0));
  CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(x[1] == doctest::Approx(0.5).epsilon(1e-15));

  SystemConfig cfg;
  Rng rng(1);
  CHECK(phase_features(sample_realization(cfg, rng)).size() == 50);
}

TEST_CASE("exploring phase agent draws uniform levels") {
  const std::size_t branches = 4, width = 8;
  auto agent = fixed_q_agent(2, branches, width, {});
  Rng rng(2);
  const std::vector<double> x{0.0, 0.0};
  std::vector<double> counts(width, 0.0);
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) counts[static_cast<std::size_t>(agent.act(x, 1.0, rng)[0])] += 1.0;
  check_uniform(counts, draws);
}

TEST_CASE("greedy phase agent picks every branch maximum") {
  std::vector<double> q(3 * 4, 0.0);
  q[0 * 4 + 2] = 1.0;
  q[1 * 4 + 0] = 0.5;
  q[2 * 4 + 3] = 2.0;
  const auto agent = fixed_q_agent(2, 3, 4, q);
  Rng rng(3);
  CHECK(agent.act(std::vector<double>{0.3, -1.0}, 0.0, rng) == std::vector<int>{2, 0, 3});
}

TEST_CASE("equal Q-values pick level 0") {
  const auto agent = fixed_q_agent(2, 2, 8, std::vector<double>(16, 0.25));
  Rng rng(4);
  CHECK(agent.act(std::vector<double>{1.0, 1.0}, 0.0, rng) == std::vector<int>{0, 0});
  CHECK(greedy_index(std::vector<double>{1.0, 3.0, 3.0}) == 1);
  CHECK_THROWS_AS(greedy_index(std::vector<double>{}), ShapeError);
}

TEST_CASE("greedy choice is invariant under positive affine maps") {
  Rng rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> q(8);
    for (double& v : q) v = 4.0 * rng.uniform() - 2.0;
    const double a = 0.01 + 100.0 * rng.uniform();
    const double b = 20.0 * rng.uniform() - 10.0;
    std::vector<double> mapped(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) mapped[i] = a * q[i] + b;
    CHECK(greedy_index(mapped) == greedy_index(q));
  }
}

TEST_CASE("allocation features") {
  SystemConfig cfg;
  cfg.k_ris = 1;
  cfg.m_tags = 1;
  const auto chan = single_element(1.0, 1.0);
  CHECK(alloc_features(chan, PhaseAction{{0}, 8}) == std::vector<double>{1.0, 1.0, 1.0, 1.0});

  cfg = desk_config();
  Rng rng(6);
  for (int i = 0; i < 100; ++i) {
    const auto c = sample_realization(cfg, rng);
    PhaseAction phases{std::vector<int>(cfg.k_ris), 8};
    for (int& l : phases.levels) l = static_cast<int>(rng.uniform_index(8));
    const auto x = alloc_features(c, phases);
    REQUIRE(x.size() == 10);
    CHECK(x[1] == std::norm(effective_ris_channel(c.h_br, c.h_ru, phases)));
  }
}

TEST_CASE("joint allocation id bijection") {
  const AllocSpace space = AllocSpace::from(desk_config());
  CHECK(space.size() == 64);
  CHECK(space.decode(0) == AllocAction{0, 0, 0, 0});
  CHECK(space.decode(63) == AllocAction{3, 3, 3, 0});
  CHECK(space.decode(17) == AllocAction{1, 0, 1, 0});
  for (std::size_t id = 0; id < space.size(); ++id) CHECK(space.encode(space.decode(id)) == id);
  CHECK_THROWS_AS(space.decode(64), ActionError);
  CHECK_THROWS_AS(space.encode(AllocAction{4, 0, 0, 0}), ActionError);

  SystemConfig with_power = desk_config();
  with_power.power_grid = {0.5, 1.0};
  const AllocSpace powered = AllocSpace::from(with_power);
  CHECK(powered.size() == 128);
  CHECK(powered.decode(1) == AllocAction{0, 0, 0, 1});
  CHECK(powered.decode(35) == AllocAction{1, 0, 1, 1});
}

TEST_CASE("greedy allocation agent decodes the peak id") {
  const SystemConfig cfg = desk_config();
  Rng init(7);
  AllocAgent agent(cfg, init);
  Mlp& net = agent.core().net();
  const std::size_t last = net.num_layers() - 1;
  net.weights(last).setZero();
  net.biases(last).setZero();
  net.biases(last)(17) = 1.0;
  Rng rng(8);
  const std::vector<double> x(10, 0.5);
  CHECK(agent.act(x, 0.0, rng) == AllocAction{1, 0, 1, 0});
}

TEST_CASE("exploring allocation agent is uniform over joint ids") {
  const SystemConfig cfg = desk_config();
  Rng init(9);
  const AllocAgent agent(cfg, init);
  const AllocSpace& space = agent.space();
  Rng rng(10);
  const std::vector<double> x(10, 0.0);
  std::vector<double> counts(space.size(), 0.0);
  const int draws = 64000;
  for (int i = 0; i < draws; ++i) counts[space.encode(agent.act(x, 1.0, rng))] += 1.0;
  check_uniform(counts, draws);
}

TEST_CASE("reward is the objective") {
  LinkMetrics m;
  m.feasible = true;
  m.ee = 1.9801980198019802;
  m.se = 2.0;
  CHECK(reward(m, Objective::ee, -1.0) == 1.9801980198019802);
  CHECK(reward(m, Objective::se, -1.0) == 2.0);
  m.feasible = false;
  CHECK(reward(m, Objective::ee, -1.0) == -1.0);
}

TEST_CASE("reward is finite for every action on random realizations") {
  const SystemConfig cfg = desk_config();
  const AllocSpace space = AllocSpace::from(cfg);
  Rng rng(11);
  for (int i = 0; i < 10000; ++i) {
    const auto chan = sample_realization(cfg, rng);
    PhaseAction phases{std::vector<int>(cfg.k_ris), 8};
    for (int& l : phases.levels) l = static_cast<int>(rng.uniform_index(8));
    const auto alloc = space.decode(rng.uniform_index(space.size()));
    for (Objective mode : {Objective::ee, Objective::se})
      REQUIRE(std::isfinite(reward(evaluate(cfg, chan, phases, alloc), mode, cfg.learning.penalty)));
  }
}

TEST_CASE("phase reward shaping") {
  const SystemConfig cfg = desk_config();
  Rng rng(12);
  for (int i = 0; i < 200; ++i) {
    const auto chan = sample_realization(cfg, rng);
    PhaseAction phases{std::vector<int>(cfg.k_ris), 8};
    for (int& l : phases.levels) l = static_cast<int>(rng.uniform_index(8));
    const cplx h2 = effective_ris_channel(chan.h_br, chan.h_ru, phases);
    const auto parts = element_projection_rewards(chan, phases);
    REQUIRE(parts.size() == cfg.k_ris);
    double sum = 0.0;
    for (double p : parts) sum += p;
    CHECK(sum == doctest::Approx(h2.real()).epsilon(1e-12));

    // Element k's entry is what Re(h2) loses when that element is removed.
    const std::size_t k = rng.uniform_index(cfg.k_ris);
    auto h_br = chan.h_br;
    h_br[k] = 0.0;
    const double without = effective_ris_channel(h_br, chan.h_ru, phases).real();
    CHECK(parts[k] == doctest::Approx(h2.real() - without).epsilon(1e-9));

    const double proj = real_projection_reward(chan, phases);
    CHECK(proj == doctest::Approx(h2.real() / aligned_phase_bound(chan.h_br, chan.h_ru)).epsilon(1e-12));
    CHECK(std::abs(proj) <= 1.0 + 1e-12);
  }
  // Continuous alignment would reach exactly 1; the rounded levels come close.
  const auto chan = sample_realization(cfg, rng);
  CHECK(real_projection_reward(chan, rounded_alignment(chan.h_br, chan.h_ru, 8)) >= std::cos(std::numbers::pi / 8));
}

TEST_CASE("epsilon schedule") {
  LearningParams lp;
  CHECK(epsilon_at(lp, 0, 1000) == 1.0);
  CHECK(epsilon_at(lp, 250, 1000) == doctest::Approx(0.525).epsilon(1e-12));
  CHECK(epsilon_at(lp, 500, 1000) == 0.05);
  CHECK(epsilon_at(lp, 999, 1000) == 0.05);
  double prev = 2.0;
  for (std::size_t s = 0; s < 500; ++s) {
    const double e = epsilon_at(lp, s, 1000);
    CHECK(e < prev);
    CHECK(e >= 0.05);
    prev = e;
  }
}

TEST_CASE("training log floors epsilon and is reproducible") {
  const SystemConfig cfg = tiny_config();
  const auto a = train(cfg, Objective::ee, 42);
  const auto b = train(cfg, Objective::ee, 42);
  REQUIRE(a.log.size() == 8);
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].sample_index == 50 * (i + 1));
    CHECK(a.log[i].epsilon == b.log[i].epsilon);
    CHECK(a.log[i].mean_reward_window == b.log[i].mean_reward_window);
    CHECK(a.log[i].feasible_fraction == b.log[i].feasible_fraction);
  }
  CHECK(a.log.back().epsilon == 0.05);
  CHECK(same_parameters(a.phase.core().net(), b.phase.core().net()));
  CHECK(same_parameters(a.alloc.core().net(), b.alloc.core().net()));

  const auto c = train(cfg, Objective::ee, 43);
  CHECK_FALSE(same_parameters(a.phase.core().net(), c.phase.core().net()));
}

TEST_CASE("training observer sees every log row") {
  SystemConfig cfg = tiny_config();
  cfg.learning.train_samples = 120;
  std::vector<std::size_t> seen;
  const auto result = train(cfg, Objective::se, 1, [&](const TrainingLogRow& row) { seen.push_back(row.sample_index); });
  CHECK(seen == std::vector<std::size_t>{50, 100, 120});
  CHECK(result.log.size() == 3);
}

TEST_CASE("a training step touches only the taken actions' output rows") {
  const std::size_t branches = 2, width = 4;
  Rng init(13);
  LearningParams lp = tiny_config().learning;
  lp.minibatch = 1;
  BranchingQAgent agent(3, branches, width, {5}, lp, init);
  agent.remember(Transition{{0.1, 0.2, 0.3}, {1, 3}, 2.0, {}});
  const Mlp before = agent.net();
  Rng rng(14);
  agent.learn(rng);
  const std::size_t out = agent.net().num_layers() - 1;
  for (std::size_t row = 0; row < branches * width; ++row) {
    const auto r = static_cast<Eigen::Index>(row);
    const bool taken = row == 0 * width + 1 || row == 1 * width + 3;
    CHECK((agent.net().biases(out)(r) != before.biases(out)(r)) == taken);
    if (!taken) CHECK(agent.net().weights(out).row(r) == before.weights(out).row(r));
  }
}

TEST_CASE("per-branch rewards set per-branch targets") {
  Rng init(15);
  LearningParams lp = tiny_config().learning;
  lp.minibatch = 4;
  lp.learning_rate = 1e-2;
  BranchingQAgent agent(2, 2, 2, {8}, lp, init);
  const std::vector<double> x{0.5, -0.5};
  for (int i = 0; i < 4; ++i) agent.remember(Transition{x, {0, 1}, 0.0, {3.0, -2.0}});
  Rng rng(16);
  for (int step = 0; step < 2000; ++step) agent.learn(rng);
  const auto q = agent.q_values(x);
  CHECK(q[0] == doctest::Approx(3.0).epsilon(1e-3));
  CHECK(q[3] == doctest::Approx(-2.0).epsilon(1e-3));
}

TEST_CASE("transitions are validated before storage") {
  Rng init(17);
  BranchingQAgent agent(2, 2, 3, {4}, tiny_config().learning, init);
  CHECK_THROWS_AS(agent.remember(Transition{{1.0}, {0, 0}, 0.0, {}}), ShapeError);
  CHECK_THROWS_AS(agent.remember(Transition{{1.0, 2.0}, {0}, 0.0, {}}), ShapeError);
  CHECK_THROWS_AS(agent.remember(Transition{{1.0, 2.0}, {0, 3}, 0.0, {}}), ActionError);
  CHECK_THROWS_AS(agent.remember(Transition{{1.0, 2.0}, {0, 1}, NAN, {}}), NumericalError);
  CHECK_THROWS_AS(agent.remember(Transition{{1.0, 2.0}, {0, 1}, 0.0, {1.0}}), ShapeError);
  CHECK(agent.buffer().size() == 0);
  CHECK_FALSE(agent.ready());
  Rng rng(18);
  CHECK_THROWS_AS(agent.learn(rng), NotReadyError);
}

TEST_CASE("feature normalizer") {
  FeatureNormalizer norm(2, 4);
  const std::vector<std::vector<double>> xs{{1.0, 5.0}, {3.0, 5.0}, {5.0, 5.0}, {7.0, 5.0}};
  for (const auto& x : xs) {
    CHECK_FALSE(norm.frozen());
    norm.observe(x);
  }
  CHECK(norm.frozen());
  CHECK(norm.mean(0) == 4.0);
  CHECK(norm.variance(0) == 5.0);
  CHECK(norm.variance(1) == 0.0);
  norm.observe(std::vector<double>{100.0, 100.0});
  CHECK(norm.count() == 4);

  const auto z = norm.transform(std::vector<double>{4.0 + std::sqrt(5.0), 5.0 + 1e-4});
  CHECK(z[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(z[1] == doctest::Approx(1e-4 / std::sqrt(FeatureNormalizer::kVarianceFloor)).epsilon(1e-9));
  CHECK_THROWS_AS(norm.transform(std::vector<double>{1.0}), ShapeError);

  const auto back = FeatureNormalizer::from_json(norm.to_json());
  CHECK(back.transform(std::vector<double>{2.0, 3.0}) == norm.transform(std::vector<double>{2.0, 3.0}));
  CHECK(back.frozen());
}

TEST_CASE("agent checkpoints round trip and reject other action spaces") {
  const SystemConfig cfg = tiny_config();
  const auto trained = train(cfg, Objective::ee, 3);
  const auto phase_doc = nlohmann::json::parse(trained.phase.to_json(cfg).dump());
  const auto alloc_doc = nlohmann::json::parse(trained.alloc.to_json(cfg).dump());
  const auto phase = PhaseAgent::from_json(phase_doc, cfg);
  const auto alloc = AllocAgent::from_json(alloc_doc, cfg);

  Rng rng(19);
  for (int i = 0; i < 20; ++i) {
    const auto chan = sample_realization(cfg, rng);
    const auto pf = phase_features(chan);
    CHECK(phase.core().q_values(pf) == trained.phase.core().q_values(pf));
    const auto d1 = greedy_decision(phase, alloc, chan);
    const auto d2 = greedy_decision(trained.phase, trained.alloc, chan);
    CHECK(d1.phases == d2.phases);
    CHECK(d1.alloc == d2.alloc);
  }
  CHECK(phase.to_json(cfg).dump() == phase_doc.dump());

  SystemConfig other = cfg;
  other.k_ris = 4;
  CHECK_THROWS_AS(PhaseAgent::from_json(phase_doc, other), ArtifactError);
  other = cfg;
  other.phase_levels = 8;
  CHECK_THROWS_AS(PhaseAgent::from_json(phase_doc, other), ArtifactError);
  other = cfg;
  other.m_tags = 3;
  CHECK_THROWS_AS(AllocAgent::from_json(alloc_doc, other), ArtifactError);
  other = cfg;
  other.beta_grid = {0.4, 0.6};
  CHECK_THROWS_AS(AllocAgent::from_json(alloc_doc, other), ArtifactError);
  CHECK_THROWS_AS(AllocAgent::from_json(phase_doc, cfg), ArtifactError);
  CHECK_THROWS_AS(PhaseAgent::from_json(nlohmann::json{{"format", "nope"}}, cfg), ArtifactError);
}

TEST_CASE("oracle phases dominate random phase probes for every allocation") {
  const SystemConfig cfg = desk_config();
  const AllocSpace space = AllocSpace::from(cfg);
  Rng rng(20);
  for (int i = 0; i < 100; ++i) {
    const auto chan = sample_realization(cfg, rng);
    const PhaseAction best = phase_oracle(chan, static_cast<int>(cfg.phase_levels));
    std::vector<double> best_ee(space.size());
    for (std::size_t id = 0; id < space.size(); ++id) best_ee[id] = evaluate(cfg, chan, best, space.decode(id)).ee;
    for (int probe = 0; probe < 50; ++probe) {
      PhaseAction phases{std::vector<int>(cfg.k_ris), static_cast<int>(cfg.phase_levels)};
      for (int& l : phases.levels) l = static_cast<int>(rng.uniform_index(cfg.phase_levels));
      for (std::size_t id = 0; id < space.size(); ++id)
        REQUIRE(best_ee[id] >= evaluate(cfg, chan, phases, space.decode(id)).ee);
    }
  }
}
