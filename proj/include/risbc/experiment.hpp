#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "risbc/agents.hpp"
#include "risbc/config.hpp"
#include "risbc/link.hpp"

namespace risbc {

enum class Policy { dqn, oracle, random, fixed };

Policy parse_policy(const std::string& name);
std::string to_string(Policy policy);
// Comma-separated list, e.g. "dqn,oracle". Duplicates are an error; the
// result is in canonical order (dqn, oracle, random, fixed).
std::vector<Policy> parse_policies(const std::string& list);

enum class SweepAxis { p_max, m_tags, p_c };

SweepAxis parse_axis(const std::string& name);
std::string to_string(SweepAxis axis);

struct SweepSpec {
  SweepAxis axis = SweepAxis::p_max;
  std::vector<double> values;
  std::size_t realizations_per_point = 2000;
  std::vector<Policy> policies{Policy::oracle};
  Objective mode = Objective::ee;
  std::uint64_t seed = 0;

  void validate() const;  // throws ConfigError
};

// The config with one axis value applied.
SystemConfig apply_axis(const SystemConfig& cfg, SweepAxis axis, double value);

struct TrainedPair {
  PhaseAgent phase;
  AllocAgent alloc;
};

// Reads phase_agent.json and alloc_agent.json from dir. Throws ArtifactError
// when a file is missing or does not match cfg.
TrainedPair load_agents(const std::filesystem::path& dir, const SystemConfig& cfg);

struct PolicyOutcome {
  LinkMetrics metrics;
  double objective = 0.0;
};

// Decision of one policy on one realization. `random_rng` is consumed only by
// Policy::random; `agents` is required only by Policy::dqn.
PolicyOutcome run_policy(Policy policy, const SystemConfig& cfg, const ChannelRealization& chan, Objective mode,
                         const TrainedPair* agents, Rng& random_rng);

struct EvalRow {
  std::size_t sample = 0;
  Policy policy = Policy::oracle;
  double se = 0.0;
  double ee = 0.0;
  bool feasible = false;
  double objective = 0.0;
};

struct PolicySummary {
  Policy policy = Policy::oracle;
  std::size_t n = 0;
  double mean_objective = 0.0;
  double mean_se = 0.0;
  double mean_ee = 0.0;
  double feasible_frac = 0.0;
};

// n_test realizations from stream derive_seed(seed, 0); the random policy
// draws from derive_seed(seed, 1). Rows are sample-major, policies in
// canonical order.
std::vector<EvalRow> evaluate_policies(const SystemConfig& cfg, Objective mode, const std::vector<Policy>& policies,
                                       const TrainedPair* agents, std::size_t n_test, std::uint64_t seed);
std::vector<PolicySummary> summarize(const std::vector<EvalRow>& rows, const std::vector<Policy>& policies);

struct SweepRow {
  SweepAxis axis = SweepAxis::p_max;
  double axis_value = 0.0;
  Policy policy = Policy::oracle;
  Objective mode = Objective::ee;
  double mean = 0.0;  // mean EE or SE (per mode) over the realizations
  double std_err = 0.0;
  std::size_t n = 0;
  double feasible_frac = 0.0;
  std::uint64_t seed = 0;
};

// Every axis point and every policy see the same realization stream
// (common random numbers): realizations from derive_seed(seed, 0), random
// policy from derive_seed(seed, 1). Rows are point-major, policies in
// canonical order.
std::vector<SweepRow> sweep(const SweepSpec& spec, const SystemConfig& cfg, const TrainedPair* agents);

// CSV writers. UTF-8, '\n' line endings, '.' decimal separator, doubles with
// 17 significant digits.
std::string training_log_csv(const std::vector<TrainingLogRow>& log);
std::string eval_rows_csv(const std::vector<EvalRow>& rows);
std::string sweep_csv(const std::vector<SweepRow>& rows);

inline constexpr const char* kSweepHeader = "axis,axis_value,policy,mode,mean,std_err,n,feasible_frac,seed";
inline constexpr const char* kEvalHeader = "sample,policy,se,ee,feasible,objective";
inline constexpr const char* kTrainingLogHeader = "sample_index,epsilon,mean_reward_window,feasible_fraction";

// Jobs behind the CLI subcommands. Each writes run_manifest.json (resolved
// config, seed and job parameters) into out_dir next to its outputs.
//   train:  phase_agent.json, alloc_agent.json, training_log.csv
//   eval:   eval_rows.csv, summary.json
//   sweep:  sweep.csv
void run_train(const SystemConfig& cfg, Objective mode, std::uint64_t seed, const std::filesystem::path& out_dir,
               const TrainingObserver& observer = {});
nlohmann::json run_eval(const SystemConfig& cfg, Objective mode, const std::vector<Policy>& policies,
                        const std::optional<std::filesystem::path>& checkpoints, std::size_t n_test,
                        std::uint64_t seed, const std::filesystem::path& out_dir);
std::vector<SweepRow> run_sweep(const SweepSpec& spec, const SystemConfig& cfg,
                                const std::optional<std::filesystem::path>& checkpoints,
                                const std::filesystem::path& out_dir);

// Parses a CSV written by eval_rows_csv.
std::vector<EvalRow> parse_eval_rows_csv(const std::string& text);

}  // namespace risbc
