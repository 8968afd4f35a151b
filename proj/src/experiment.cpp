#include "risbc/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "risbc/errors.hpp"
#include "risbc/oracle.hpp"

namespace risbc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr Policy kCanonicalOrder[] = {Policy::dqn, Policy::oracle, Policy::random, Policy::fixed};

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io_error", "cannot write '" + path.string() + "'");
  out << text;
}

void write_json(const fs::path& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ArtifactError("checkpoint_not_found", "cannot open checkpoint '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ArtifactError("cannot parse checkpoint '" + path.string() + "': " + e.what());
  }
}

void check_metrics(const LinkMetrics& m) {
  for (double v : {m.sinr1, m.sinr2, m.sinr_b, m.r1, m.r2, m.r_b, m.se, m.ee}) {
    if (!std::isfinite(v)) throw NumericalError("non-finite link metric");
  }
}

json policies_json(const std::vector<Policy>& policies) {
  json out = json::array();
  for (Policy p : policies) out.push_back(to_string(p));
  return out;
}

json manifest(const std::string& command, const SystemConfig& cfg, std::uint64_t seed, json extra) {
  json doc{{"command", command}, {"seed", seed}, {"config", config_to_json(cfg)}};
  for (auto& [key, value] : extra.items()) doc[key] = value;
  return doc;
}

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("io_error", "cannot create output directory '" + dir.string() + "': " + ec.message());
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream is(text);
  while (std::getline(is, item, sep)) parts.push_back(item);
  return parts;
}

}  // namespace

Policy parse_policy(const std::string& name) {
  for (Policy p : kCanonicalOrder) {
    if (to_string(p) == name) return p;
  }
  throw ConfigError("unknown policy '" + name + "' (expected dqn, oracle, random or fixed)");
}

std::string to_string(Policy policy) {
  switch (policy) {
    case Policy::dqn: return "dqn";
    case Policy::oracle: return "oracle";
    case Policy::random: return "random";
    case Policy::fixed: return "fixed";
  }
  return "?";
}

std::vector<Policy> parse_policies(const std::string& list) {
  std::vector<Policy> seen;
  for (const auto& name : split(list, ',')) {
    const Policy p = parse_policy(name);
    if (std::find(seen.begin(), seen.end(), p) != seen.end()) throw ConfigError("policy '" + name + "' listed twice");
    seen.push_back(p);
  }
  if (seen.empty()) throw ConfigError("empty policy list");
  std::vector<Policy> ordered;
  for (Policy p : kCanonicalOrder) {
    if (std::find(seen.begin(), seen.end(), p) != seen.end()) ordered.push_back(p);
  }
  return ordered;
}

SweepAxis parse_axis(const std::string& name) {
  if (name == "p_max") return SweepAxis::p_max;
  if (name == "m_tags") return SweepAxis::m_tags;
  if (name == "p_c") return SweepAxis::p_c;
  throw ConfigError("unknown sweep axis '" + name + "' (expected p_max, m_tags or p_c)");
}

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::p_max: return "p_max";
    case SweepAxis::m_tags: return "m_tags";
    case SweepAxis::p_c: return "p_c";
  }
  return "?";
}

void SweepSpec::validate() const {
  if (values.empty()) throw ConfigError("sweep values must not be empty");
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (!(values[i] > values[i - 1])) throw ConfigError("sweep values must be strictly increasing");
  }
  if (realizations_per_point < 1) throw ConfigError("realizations_per_point must be >= 1");
  if (policies.empty()) throw ConfigError("sweep needs at least one policy");
}

SystemConfig apply_axis(const SystemConfig& cfg, SweepAxis axis, double value) {
  SystemConfig out = cfg;
  switch (axis) {
    case SweepAxis::p_max:
      out.p_max = value;
      break;
    case SweepAxis::p_c:
      out.p_c = value;
      break;
    case SweepAxis::m_tags:
      if (value < 1.0 || value != std::floor(value)) throw ConfigError("m_tags sweep values must be positive integers");
      out.m_tags = static_cast<std::size_t>(value);
      break;
  }
  out.validate();
  return out;
}

TrainedPair load_agents(const fs::path& dir, const SystemConfig& cfg) {
  return TrainedPair{PhaseAgent::from_json(read_json(dir / "phase_agent.json"), cfg),
                     AllocAgent::from_json(read_json(dir / "alloc_agent.json"), cfg)};
}

PolicyOutcome run_policy(Policy policy, const SystemConfig& cfg, const ChannelRealization& chan, Objective mode,
                         const TrainedPair* agents, Rng& random_rng) {
  PolicyOutcome out;
  switch (policy) {
    case Policy::dqn: {
      if (agents == nullptr) throw ArtifactError("checkpoint_not_found", "the dqn policy needs trained checkpoints");
      const JointDecision d = greedy_decision(agents->phase, agents->alloc, chan);
      out.metrics = evaluate(cfg, chan, d.phases, d.alloc);
      out.objective = objective(out.metrics, mode, cfg.learning.penalty);
      break;
    }
    case Policy::oracle: {
      const OracleResult r = joint_oracle(cfg, chan, mode);
      out.metrics = r.metrics;
      out.objective = r.objective_value;
      break;
    }
    case Policy::random: {
      const OracleResult r = baseline_random(cfg, chan, random_rng, mode);
      out.metrics = r.metrics;
      out.objective = r.objective_value;
      break;
    }
    case Policy::fixed: {
      const OracleResult r = baseline_fixed(cfg, chan, mode);
      out.metrics = r.metrics;
      out.objective = r.objective_value;
      break;
    }
  }
  check_metrics(out.metrics);
  return out;
}

std::vector<EvalRow> evaluate_policies(const SystemConfig& cfg, Objective mode, const std::vector<Policy>& policies,
                                       const TrainedPair* agents, std::size_t n_test, std::uint64_t seed) {
  cfg.validate();
  Rng env_rng(derive_seed(seed, 0));
  Rng random_rng(derive_seed(seed, 1));
  std::vector<EvalRow> rows;
  rows.reserve(n_test * policies.size());
  for (std::size_t i = 0; i < n_test; ++i) {
    const ChannelRealization chan = sample_realization(cfg, env_rng);
    for (Policy p : policies) {
      const PolicyOutcome o = run_policy(p, cfg, chan, mode, agents, random_rng);
      rows.push_back(EvalRow{i, p, o.metrics.se, o.metrics.ee, o.metrics.feasible, o.objective});
    }
  }
  return rows;
}

std::vector<PolicySummary> summarize(const std::vector<EvalRow>& rows, const std::vector<Policy>& policies) {
  std::vector<PolicySummary> out;
  for (Policy p : policies) {
    PolicySummary s;
    s.policy = p;
    double feasible = 0.0;
    for (const EvalRow& r : rows) {
      if (r.policy != p) continue;
      ++s.n;
      s.mean_objective += r.objective;
      s.mean_se += r.se;
      s.mean_ee += r.ee;
      feasible += r.feasible ? 1.0 : 0.0;
    }
    if (s.n > 0) {
      const double n = static_cast<double>(s.n);
      s.mean_objective /= n;
      s.mean_se /= n;
      s.mean_ee /= n;
      s.feasible_frac = feasible / n;
    }
    out.push_back(s);
  }
  return out;
}

std::vector<SweepRow> sweep(const SweepSpec& spec, const SystemConfig& cfg, const TrainedPair* agents) {
  spec.validate();
  std::vector<SweepRow> rows;
  for (double value : spec.values) {
    const SystemConfig point = apply_axis(cfg, spec.axis, value);
    Rng env_rng(derive_seed(spec.seed, 0));
    Rng random_rng(derive_seed(spec.seed, 1));

    struct Acc {
      double sum = 0.0, sum_sq = 0.0, feasible = 0.0;
    };
    std::vector<Acc> acc(spec.policies.size());
    for (std::size_t i = 0; i < spec.realizations_per_point; ++i) {
      const ChannelRealization chan = sample_realization(point, env_rng);
      for (std::size_t j = 0; j < spec.policies.size(); ++j) {
        const PolicyOutcome o = run_policy(spec.policies[j], point, chan, spec.mode, agents, random_rng);
        const double v = spec.mode == Objective::ee ? o.metrics.ee : o.metrics.se;
        acc[j].sum += v;
        acc[j].sum_sq += v * v;
        acc[j].feasible += o.metrics.feasible ? 1.0 : 0.0;
      }
    }
    const double n = static_cast<double>(spec.realizations_per_point);
    for (std::size_t j = 0; j < spec.policies.size(); ++j) {
      SweepRow row;
      row.axis = spec.axis;
      row.axis_value = value;
      row.policy = spec.policies[j];
      row.mode = spec.mode;
      row.mean = acc[j].sum / n;
      if (spec.realizations_per_point > 1) {
        const double var = std::max(0.0, (acc[j].sum_sq - n * row.mean * row.mean) / (n - 1.0));
        row.std_err = std::sqrt(var / n);
      }
      row.n = spec.realizations_per_point;
      row.feasible_frac = acc[j].feasible / n;
      row.seed = spec.seed;
      rows.push_back(row);
    }
  }
  return rows;
}

std::string training_log_csv(const std::vector<TrainingLogRow>& log) {
  std::string out = std::string(kTrainingLogHeader) + "\n";
  for (const auto& r : log) {
    out += std::to_string(r.sample_index) + "," + fmt_double(r.epsilon) + "," + fmt_double(r.mean_reward_window) +
           "," + fmt_double(r.feasible_fraction) + "\n";
  }
  return out;
}

std::string eval_rows_csv(const std::vector<EvalRow>& rows) {
  std::string out = std::string(kEvalHeader) + "\n";
  for (const auto& r : rows) {
    out += std::to_string(r.sample) + "," + to_string(r.policy) + "," + fmt_double(r.se) + "," + fmt_double(r.ee) +
           "," + (r.feasible ? "1" : "0") + "," + fmt_double(r.objective) + "\n";
  }
  return out;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = std::string(kSweepHeader) + "\n";
  for (const auto& r : rows) {
    out += to_string(r.axis) + "," + fmt_double(r.axis_value) + "," + to_string(r.policy) + "," + to_string(r.mode) +
           "," + fmt_double(r.mean) + "," + fmt_double(r.std_err) + "," + std::to_string(r.n) + "," +
           fmt_double(r.feasible_frac) + "," + std::to_string(r.seed) + "\n";
  }
  return out;
}

std::vector<EvalRow> parse_eval_rows_csv(const std::string& text) {
  std::vector<EvalRow> rows;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kEvalHeader) throw ArtifactError("eval CSV header mismatch");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 6) throw ArtifactError("eval CSV row has " + std::to_string(cells.size()) + " cells");
    EvalRow r;
    r.sample = std::stoull(cells[0]);
    r.policy = parse_policy(cells[1]);
    r.se = std::stod(cells[2]);
    r.ee = std::stod(cells[3]);
    r.feasible = cells[4] == "1";
    r.objective = std::stod(cells[5]);
    rows.push_back(r);
  }
  return rows;
}

void run_train(const SystemConfig& cfg, Objective mode, std::uint64_t seed, const fs::path& out_dir,
               const TrainingObserver& observer) {
  prepare_dir(out_dir);
  TrainingResult result = train(cfg, mode, seed, observer);
  write_json(out_dir / "phase_agent.json", result.phase.to_json(cfg));
  write_json(out_dir / "alloc_agent.json", result.alloc.to_json(cfg));
  write_text(out_dir / "training_log.csv", training_log_csv(result.log));
  write_json(out_dir / "run_manifest.json", manifest("train", cfg, seed, {{"mode", to_string(mode)}}));
}

json run_eval(const SystemConfig& cfg, Objective mode, const std::vector<Policy>& policies,
              const std::optional<fs::path>& checkpoints, std::size_t n_test, std::uint64_t seed,
              const fs::path& out_dir) {
  std::optional<TrainedPair> agents;
  const bool wants_dqn = std::find(policies.begin(), policies.end(), Policy::dqn) != policies.end();
  if (wants_dqn) {
    if (!checkpoints) throw ArtifactError("checkpoint_not_found", "policy dqn requires --checkpoints");
    agents.emplace(load_agents(*checkpoints, cfg));
  }
  prepare_dir(out_dir);
  const auto rows = evaluate_policies(cfg, mode, policies, agents ? &*agents : nullptr, n_test, seed);
  const auto summaries = summarize(rows, policies);

  json summary{{"n_test", n_test}, {"mode", to_string(mode)}, {"seed", seed}};
  json per_policy = json::object();
  const PolicySummary* oracle = nullptr;
  for (const auto& s : summaries) {
    per_policy[to_string(s.policy)] = {{"n", s.n},
                                       {"mean_objective", s.mean_objective},
                                       {"mean_se", s.mean_se},
                                       {"mean_ee", s.mean_ee},
                                       {"feasible_frac", s.feasible_frac}};
    if (s.policy == Policy::oracle) oracle = &s;
  }
  summary["policies"] = per_policy;
  json ratios = json::object();
  if (oracle != nullptr && oracle->mean_objective != 0.0) {
    for (const auto& s : summaries) {
      if (s.policy != Policy::oracle) ratios[to_string(s.policy) + "_over_oracle"] = s.mean_objective / oracle->mean_objective;
    }
  }
  summary["ratios"] = ratios;

  write_text(out_dir / "eval_rows.csv", eval_rows_csv(rows));
  write_json(out_dir / "summary.json", summary);
  json extra{{"mode", to_string(mode)}, {"policies", policies_json(policies)}, {"n_test", n_test}};
  if (checkpoints) extra["checkpoints"] = checkpoints->string();
  write_json(out_dir / "run_manifest.json", manifest("eval", cfg, seed, extra));
  return summary;
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec, const SystemConfig& cfg,
                                const std::optional<fs::path>& checkpoints, const fs::path& out_dir) {
  spec.validate();
  std::optional<TrainedPair> agents;
  const bool wants_dqn = std::find(spec.policies.begin(), spec.policies.end(), Policy::dqn) != spec.policies.end();
  if (wants_dqn) {
    if (!checkpoints) throw ArtifactError("checkpoint_not_found", "policy dqn requires --checkpoints");
    // Every axis point must keep the agents' action space.
    for (double v : spec.values) {
      const SystemConfig point = apply_axis(cfg, spec.axis, v);
      if (!agents) agents.emplace(load_agents(*checkpoints, point));
      else load_agents(*checkpoints, point);
    }
  }
  prepare_dir(out_dir);
  const auto rows = sweep(spec, cfg, agents ? &*agents : nullptr);
  write_text(out_dir / "sweep.csv", sweep_csv(rows));
  json extra{{"mode", to_string(spec.mode)},
             {"axis", to_string(spec.axis)},
             {"values", spec.values},
             {"realizations_per_point", spec.realizations_per_point},
             {"policies", policies_json(spec.policies)}};
  if (checkpoints) extra["checkpoints"] = checkpoints->string();
  write_json(out_dir / "run_manifest.json", manifest("sweep", cfg, spec.seed, extra));
  return rows;
}

}  // namespace risbc
