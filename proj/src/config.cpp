#include "risbc/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "risbc/errors.hpp"

namespace risbc {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  const json& value = obj.at(key);
  try {
    if constexpr (std::is_same_v<T, std::size_t>) {
      if (!value.is_number_integer() || value.get<long long>() < 0)
        throw ConfigError(where + "." + key + ": expected a non-negative integer");
      out = value.get<std::size_t>();
    } else if constexpr (std::is_same_v<T, double>) {
      if (!value.is_number()) throw ConfigError(where + "." + key + ": expected a number");
      out = value.get<double>();
    } else if constexpr (std::is_same_v<T, std::vector<double>>) {
      if (!value.is_array()) throw ConfigError(where + "." + key + ": expected an array of numbers");
      out.clear();
      for (const auto& v : value) {
        if (!v.is_number()) throw ConfigError(where + "." + key + ": expected an array of numbers");
        out.push_back(v.get<double>());
      }
    } else if constexpr (std::is_same_v<T, std::vector<std::size_t>>) {
      if (!value.is_array()) throw ConfigError(where + "." + key + ": expected an array of integers");
      out.clear();
      for (const auto& v : value) {
        if (!v.is_number_integer() || v.get<long long>() <= 0)
          throw ConfigError(where + "." + key + ": expected an array of positive integers");
        out.push_back(v.get<std::size_t>());
      }
    } else {
      static_assert(sizeof(T) == 0, "unsupported config field type");
    }
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

PhaseReward parse_phase_reward(const std::string& name) {
  if (name == "shared") return PhaseReward::shared;
  if (name == "real_projection") return PhaseReward::real_projection;
  if (name == "element_projection") return PhaseReward::element_projection;
  throw ConfigError("learning.phase_reward: expected 'shared', 'real_projection' or 'element_projection', got '" +
                    name + "'");
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

bool finite(double x) { return std::isfinite(x); }

}  // namespace

std::string to_string(PhaseReward reward) {
  switch (reward) {
    case PhaseReward::shared:
      return "shared";
    case PhaseReward::real_projection:
      return "real_projection";
    case PhaseReward::element_projection:
      break;
  }
  return "element_projection";
}

void SystemConfig::validate() const {
  require(finite(p_max) && p_max > 0.0, "p_max must be > 0");
  require(finite(p_c) && p_c >= 0.0, "p_c must be >= 0");
  require(finite(noise_var) && noise_var > 0.0, "noise_var must be > 0");
  require(k_ris >= 1, "k_ris must be >= 1");
  require(m_tags >= 1, "m_tags must be >= 1");
  require(finite(beta_sic) && beta_sic >= 0.0 && beta_sic < 1.0, "beta_sic must lie in [0, 1)");
  require(finite(r_min) && r_min >= 0.0, "r_min must be >= 0");
  require(finite(eh_efficiency) && eh_efficiency > 0.0 && eh_efficiency <= 1.0,
          "eh_efficiency must lie in (0, 1]");
  require(finite(p_tag_circuit) && p_tag_circuit >= 0.0, "p_tag_circuit must be >= 0");
  for (double v : {link_vars.bs_u1, link_vars.bs_ris, link_vars.ris_u2, link_vars.bs_tag, link_vars.tag_u1})
    require(finite(v) && v >= 0.0, "link_vars entries must be >= 0");
  require(phase_levels >= 2, "phase_levels must be >= 2");
  require(!alpha_grid.empty(), "alpha_grid must not be empty");
  for (double a : alpha_grid) require(a > 0.0 && a < 0.5, "alpha_grid entries must lie in (0, 0.5)");
  require(!beta_grid.empty(), "beta_grid must not be empty");
  for (double b : beta_grid) require(b > 0.0 && b < 1.0, "beta_grid entries must lie in (0, 1)");
  for (double p : power_grid) require(finite(p) && p > 0.0 && p <= p_max, "power_grid entries must lie in (0, p_max]");

  const auto& l = learning;
  require(finite(l.learning_rate) && l.learning_rate > 0.0, "learning.learning_rate must be > 0");
  require(l.epsilon_start >= 0.0 && l.epsilon_start <= 1.0, "learning.epsilon_start must lie in [0, 1]");
  require(l.epsilon_end >= 0.0 && l.epsilon_end <= l.epsilon_start,
          "learning.epsilon_end must lie in [0, epsilon_start]");
  require(l.epsilon_decay_fraction > 0.0 && l.epsilon_decay_fraction <= 1.0,
          "learning.epsilon_decay_fraction must lie in (0, 1]");
  require(l.buffer_capacity >= 1, "learning.buffer_capacity must be >= 1");
  require(l.minibatch >= 1 && l.minibatch <= l.buffer_capacity,
          "learning.minibatch must lie in [1, buffer_capacity]");
  require(l.phase_train_every >= 1 && l.alloc_train_every >= 1, "learning.*_train_every must be >= 1");
  require(l.log_every >= 1, "learning.log_every must be >= 1");
  require(finite(l.penalty), "learning.penalty must be finite");
  require(!l.phase_hidden.empty() && !l.alloc_hidden.empty(), "hidden layer lists must not be empty");
}

SystemConfig config_from_json(const json& doc) {
  check_keys(doc,
             {"p_max", "p_c", "noise_var", "k_ris", "m_tags", "beta_sic", "r_min", "eh_efficiency",
              "p_tag_circuit", "link_vars", "phase_levels", "alpha_grid", "beta_grid", "power_grid",
              "learning"},
             "config");
  SystemConfig cfg;
  read(doc, "p_max", cfg.p_max, "config");
  read(doc, "p_c", cfg.p_c, "config");
  read(doc, "noise_var", cfg.noise_var, "config");
  read(doc, "k_ris", cfg.k_ris, "config");
  read(doc, "m_tags", cfg.m_tags, "config");
  read(doc, "beta_sic", cfg.beta_sic, "config");
  read(doc, "r_min", cfg.r_min, "config");
  read(doc, "eh_efficiency", cfg.eh_efficiency, "config");
  read(doc, "p_tag_circuit", cfg.p_tag_circuit, "config");
  read(doc, "phase_levels", cfg.phase_levels, "config");
  read(doc, "alpha_grid", cfg.alpha_grid, "config");
  read(doc, "beta_grid", cfg.beta_grid, "config");
  read(doc, "power_grid", cfg.power_grid, "config");

  if (doc.contains("link_vars")) {
    const json& lv = doc.at("link_vars");
    check_keys(lv, {"bs_u1", "bs_ris", "ris_u2", "bs_tag", "tag_u1"}, "link_vars");
    read(lv, "bs_u1", cfg.link_vars.bs_u1, "link_vars");
    read(lv, "bs_ris", cfg.link_vars.bs_ris, "link_vars");
    read(lv, "ris_u2", cfg.link_vars.ris_u2, "link_vars");
    read(lv, "bs_tag", cfg.link_vars.bs_tag, "link_vars");
    read(lv, "tag_u1", cfg.link_vars.tag_u1, "link_vars");
  }

  if (doc.contains("learning")) {
    const json& lj = doc.at("learning");
    check_keys(lj,
               {"learning_rate", "epsilon_start", "epsilon_end", "epsilon_decay_fraction", "buffer_capacity",
                "minibatch", "train_samples", "test_samples", "normalizer_warmup", "phase_train_every", "alloc_train_every", "log_every",
                "penalty", "phase_hidden", "alloc_hidden", "phase_reward"},
               "learning");
    auto& l = cfg.learning;
    read(lj, "learning_rate", l.learning_rate, "learning");
    read(lj, "epsilon_start", l.epsilon_start, "learning");
    read(lj, "epsilon_end", l.epsilon_end, "learning");
    read(lj, "epsilon_decay_fraction", l.epsilon_decay_fraction, "learning");
    read(lj, "buffer_capacity", l.buffer_capacity, "learning");
    read(lj, "minibatch", l.minibatch, "learning");
    read(lj, "train_samples", l.train_samples, "learning");
    read(lj, "test_samples", l.test_samples, "learning");
    read(lj, "normalizer_warmup", l.normalizer_warmup, "learning");
    read(lj, "phase_train_every", l.phase_train_every, "learning");
    read(lj, "alloc_train_every", l.alloc_train_every, "learning");
    read(lj, "log_every", l.log_every, "learning");
    read(lj, "penalty", l.penalty, "learning");
    read(lj, "phase_hidden", l.phase_hidden, "learning");
    read(lj, "alloc_hidden", l.alloc_hidden, "learning");
    if (lj.contains("phase_reward")) {
      if (!lj.at("phase_reward").is_string()) throw ConfigError("learning.phase_reward: expected a string");
      l.phase_reward = parse_phase_reward(lj.at("phase_reward").get<std::string>());
    }
  }

  cfg.validate();
  return cfg;
}

json config_to_json(const SystemConfig& cfg) {
  const auto& l = cfg.learning;
  return json{
      {"p_max", cfg.p_max},
      {"p_c", cfg.p_c},
      {"noise_var", cfg.noise_var},
      {"k_ris", cfg.k_ris},
      {"m_tags", cfg.m_tags},
      {"beta_sic", cfg.beta_sic},
      {"r_min", cfg.r_min},
      {"eh_efficiency", cfg.eh_efficiency},
      {"p_tag_circuit", cfg.p_tag_circuit},
      {"link_vars",
       {{"bs_u1", cfg.link_vars.bs_u1},
        {"bs_ris", cfg.link_vars.bs_ris},
        {"ris_u2", cfg.link_vars.ris_u2},
        {"bs_tag", cfg.link_vars.bs_tag},
        {"tag_u1", cfg.link_vars.tag_u1}}},
      {"phase_levels", cfg.phase_levels},
      {"alpha_grid", cfg.alpha_grid},
      {"beta_grid", cfg.beta_grid},
      {"power_grid", cfg.power_grid},
      {"learning",
       {{"learning_rate", l.learning_rate},
        {"epsilon_start", l.epsilon_start},
        {"epsilon_end", l.epsilon_end},
        {"epsilon_decay_fraction", l.epsilon_decay_fraction},
        {"buffer_capacity", l.buffer_capacity},
        {"minibatch", l.minibatch},
        {"train_samples", l.train_samples},
        {"test_samples", l.test_samples},
        {"normalizer_warmup", l.normalizer_warmup},
        {"phase_train_every", l.phase_train_every},
        {"alloc_train_every", l.alloc_train_every},
        {"log_every", l.log_every},
        {"penalty", l.penalty},
        {"phase_hidden", l.phase_hidden},
        {"alloc_hidden", l.alloc_hidden},
        {"phase_reward", to_string(l.phase_reward)}}},
  };
}

SystemConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config_not_found", "cannot open config file '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config_parse", "cannot parse '" + path.string() + "': " + e.what());
  }
  return config_from_json(doc);
}

SystemConfig desk_config() {
  SystemConfig cfg;
  cfg.k_ris = 8;
  cfg.m_tags = 4;
  cfg.phase_levels = 8;
  cfg.learning.train_samples = 20000;
  cfg.learning.test_samples = 2000;
  // Fits a single laptop core in a few minutes.
  cfg.learning.minibatch = 256;
  cfg.learning.phase_train_every = 4;
  cfg.learning.alloc_train_every = 1;
  return cfg;
}

std::uint64_t config_hash(const SystemConfig& cfg) {
  const std::string text = config_to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace risbc
