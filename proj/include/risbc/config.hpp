#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace risbc {

// Average channel power per link. Path loss is folded into these values.
struct LinkVariances {
  double bs_u1 = 1.0;   // BS -> U1 direct link
  double bs_ris = 1.0;  // BS -> RIS, per element
  double ris_u2 = 1.0;  // RIS -> U2, per element
  double bs_tag = 0.5;  // BS -> tag
  double tag_u1 = 0.5;  // tag -> U1
};

enum class PhaseReward {
  shared,          // the system objective, identical to the allocation agent's reward
  real_projection,  // Re(h2_eff) / sum_k |h_br,k h_ru,k|, in [-1, 1]
  element_projection  // branch k regresses onto Re(h_br,k e^{j theta_k} h_ru,k)
};

struct LearningParams {
  double learning_rate = 1e-3;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double epsilon_decay_fraction = 0.5;  // of train_samples
  std::size_t buffer_capacity = 50000;
  std::size_t minibatch = 1000;
  std::size_t train_samples = 200000;
  std::size_t test_samples = 20000;
  std::size_t normalizer_warmup = 1000;
  // Environment samples per gradient step, per agent.
  std::size_t phase_train_every = 1;
  std::size_t alloc_train_every = 1;
  std::size_t log_every = 1000;
  double penalty = -1.0;
  std::vector<std::size_t> phase_hidden{1000, 500};
  std::vector<std::size_t> alloc_hidden{200, 100};
  PhaseReward phase_reward = PhaseReward::element_projection;
};

struct SystemConfig {
  double p_max = 1.0;
  double p_c = 0.01;
  double noise_var = 0.1;
  std::size_t k_ris = 25;
  std::size_t m_tags = 4;
  double beta_sic = 0.2;
  double r_min = 0.1;
  double eh_efficiency = 0.6;
  double p_tag_circuit = 1e-6;
  LinkVariances link_vars;
  std::size_t phase_levels = 8;
  std::vector<double> alpha_grid{0.1, 0.2, 0.3, 0.4};
  std::vector<double> beta_grid{0.2, 0.4, 0.6, 0.8};
  // Optional transmit-power levels in watts. Empty: the BS always transmits
  // at p_max. Non-empty: the allocation agent also picks one of these.
  std::vector<double> power_grid;
  LearningParams learning;

  // Throws ConfigError on the first violated invariant.
  void validate() const;
};

// Parses a JSON document. Absent keys keep their defaults; unknown keys,
// wrong types and invariant violations throw ConfigError.
SystemConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const SystemConfig& cfg);

// Throws ConfigError with code "config_not_found" when the file is missing.
SystemConfig load_config(const std::filesystem::path& path);

// K=8, L=8, M=4, 20,000 training samples, minibatch 256, a phase-agent step
// every 4 samples: the laptop-scale setup.
SystemConfig desk_config();

// FNV-1a over the canonical JSON dump.
std::uint64_t config_hash(const SystemConfig& cfg);

std::string to_string(PhaseReward reward);

}  // namespace risbc
