// risbc: train, evaluate and sweep the RIS-aided NOMA backscatter optimizer.
//
// Exit codes: 0 success, 2 config/usage error, 3 artifact mismatch,
// 4 numerical error, 1 anything else. Failures print one JSON line on stderr:
//   {"error":"<code>","message":"<text>"}

#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "risbc/config.hpp"
#include "risbc/errors.hpp"
#include "risbc/experiment.hpp"

namespace {

using namespace risbc;

int fail(const std::string& code, const std::string& message, int exit_code) {
  std::cerr << nlohmann::json{{"error", code}, {"message", message}}.dump() << "\n";
  return exit_code;
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("cannot parse sweep value '" + item + "'");
    }
  }
  return values;
}

struct CommonOptions {
  std::string config_path;
  std::uint64_t seed = 1;
  std::string out = "out";
  std::string mode = "ee";
  bool quiet = false;

  SystemConfig config() const { return config_path.empty() ? SystemConfig{} : load_config(config_path); }
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "JSON config (defaults built in when omitted)");
  cmd->add_option("--seed", opts.seed, "Random seed");
  cmd->add_option("--out", opts.out, "Output directory");
  cmd->add_option("--mode", opts.mode, "Objective: ee or se")->check(CLI::IsMember({"ee", "se", "EE", "SE"}));
  cmd->add_flag("--quiet", opts.quiet, "No progress output");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RIS-aided NOMA backscatter simulator and dual-agent DQN optimizer"};
  app.require_subcommand(1);

  CommonOptions opts;
  std::string policies;  // default: every policy the inputs allow
  std::string checkpoints;
  std::optional<std::size_t> n_test;
  std::optional<std::size_t> train_samples;
  std::string axis = "p_max";
  std::string values = "0.5,1,2,4";
  std::size_t realizations = 2000;

  auto* train_cmd = app.add_subcommand("train", "Train both agents and write checkpoints and the training log");
  add_common(train_cmd, opts);
  train_cmd->add_option("--train-samples", train_samples, "Override learning.train_samples");

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate policies on fresh realizations");
  add_common(eval_cmd, opts);
  eval_cmd->add_option("--policies", policies, "Comma-separated subset of dqn,oracle,random,fixed");
  eval_cmd->add_option("--checkpoints", checkpoints, "Directory holding phase_agent.json and alloc_agent.json");
  eval_cmd->add_option("--n-test", n_test, "Test realizations (default: learning.test_samples)");

  auto* sweep_cmd = app.add_subcommand("sweep", "Mean EE/SE per axis value and policy");
  add_common(sweep_cmd, opts);
  sweep_cmd->add_option("--policies", policies, "Comma-separated subset of dqn,oracle,random,fixed");
  sweep_cmd->add_option("--checkpoints", checkpoints, "Directory holding trained agents (policy dqn)");
  sweep_cmd->add_option("--axis", axis, "p_max, m_tags or p_c");
  sweep_cmd->add_option("--values", values, "Strictly increasing comma-separated axis values");
  sweep_cmd->add_option("--realizations", realizations, "Realizations per axis point");

  auto* oracle_cmd = app.add_subcommand("oracle", "Exhaustive-oracle evaluation (eval with policy oracle)");
  add_common(oracle_cmd, opts);
  oracle_cmd->add_option("--n-test", n_test, "Test realizations (default: learning.test_samples)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    SystemConfig cfg = opts.config();
    if (train_samples) {
      cfg.learning.train_samples = *train_samples;
      cfg.validate();
    }
    const Objective mode = parse_objective(opts.mode);
    const std::optional<std::filesystem::path> ckpt =
        checkpoints.empty() ? std::nullopt : std::optional<std::filesystem::path>(checkpoints);
    const std::string default_policies = ckpt ? "dqn,oracle,random,fixed" : "oracle,random,fixed";

    if (*train_cmd) {
      TrainingObserver progress;
      if (!opts.quiet) {
        progress = [](const TrainingLogRow& row) {
          std::cerr << "sample " << row.sample_index << "  eps " << row.epsilon << "  mean reward "
                    << row.mean_reward_window << "  feasible " << row.feasible_fraction << "\n";
        };
      }
      run_train(cfg, mode, opts.seed, opts.out, progress);
    } else if (*eval_cmd || *oracle_cmd) {
      const std::vector<Policy> chosen =
          *oracle_cmd ? std::vector<Policy>{Policy::oracle} : parse_policies(policies.empty() ? default_policies : policies);
      const auto summary =
          run_eval(cfg, mode, chosen, ckpt, n_test.value_or(cfg.learning.test_samples), opts.seed, opts.out);
      if (!opts.quiet) std::cout << summary.dump(2) << "\n";
    } else if (*sweep_cmd) {
      SweepSpec spec;
      spec.axis = parse_axis(axis);
      spec.values = parse_values(values);
      spec.realizations_per_point = realizations;
      spec.policies = parse_policies(policies.empty() ? default_policies : policies);
      spec.mode = mode;
      spec.seed = opts.seed;
      const auto rows = run_sweep(spec, cfg, ckpt, opts.out);
      if (!opts.quiet) std::cout << sweep_csv(rows);
    }
  } catch (const ConfigError& e) {
    return fail(e.code(), e.what(), 2);
  } catch (const ArtifactError& e) {
    return fail(e.code(), e.what(), 3);
  } catch (const NumericalError& e) {
    return fail(e.code(), e.what(), 4);
  } catch (const Error& e) {
    return fail(e.code(), e.what(), 1);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 1);
  }
  return 0;
}
