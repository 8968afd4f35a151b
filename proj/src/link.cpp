#include "risbc/link.hpp"

#include <cmath>

#include "risbc/errors.hpp"

namespace risbc {

Objective parse_objective(const std::string& name) {
  if (name == "ee" || name == "EE") return Objective::ee;
  if (name == "se" || name == "SE") return Objective::se;
  throw ConfigError("unknown objective mode '" + name + "' (expected ee or se)");
}

std::string to_string(Objective mode) { return mode == Objective::ee ? "ee" : "se"; }

void AllocAction::check(const SystemConfig& cfg) const {
  if (alpha_idx >= cfg.alpha_grid.size()) throw ActionError("alpha index " + std::to_string(alpha_idx) + " out of range");
  if (beta_idx >= cfg.beta_grid.size()) throw ActionError("beta index " + std::to_string(beta_idx) + " out of range");
  if (tag_idx >= cfg.m_tags) throw ActionError("tag index " + std::to_string(tag_idx) + " out of range");
  const std::size_t powers = cfg.power_grid.empty() ? 1 : cfg.power_grid.size();
  if (power_idx >= powers) throw ActionError("power index " + std::to_string(power_idx) + " out of range");
}

double transmit_power(const SystemConfig& cfg, const AllocAction& alloc) {
  return cfg.power_grid.empty() ? cfg.p_max : cfg.power_grid.at(alloc.power_idx);
}

LinkMetrics evaluate_with_gain(const SystemConfig& cfg, const ChannelRealization& chan, double h2_power,
                               const AllocAction& alloc) {
  alloc.check(cfg);
  if (chan.f.size() != cfg.m_tags || chan.g.size() != cfg.m_tags)
    throw ShapeError("realization has " + std::to_string(chan.f.size()) + " tags, expected " +
                     std::to_string(cfg.m_tags));

  const double p = transmit_power(cfg, alloc);
  const double a1 = cfg.alpha_grid[alloc.alpha_idx];
  const double a2 = 1.0 - a1;
  const double b = cfg.beta_grid[alloc.beta_idx];
  const double s2 = cfg.noise_var;
  const double h1_power = std::norm(chan.h1);
  const double tag_power = std::norm(chan.tag_cascade(alloc.tag_idx));

  LinkMetrics m;
  m.power = p;
  m.sinr2 = a2 * p * h2_power / (a1 * p * h2_power + s2);
  m.sinr1 = a1 * p * h1_power / (cfg.beta_sic * a2 * p * h1_power + b * p * tag_power + s2);
  m.sinr_b = b * p * tag_power / (cfg.beta_sic * p * h1_power + s2);
  m.r1 = std::log2(1.0 + m.sinr1);
  m.r2 = std::log2(1.0 + m.sinr2);
  m.r_b = std::log2(1.0 + m.sinr_b);
  m.se = m.r1 + m.r2 + m.r_b;
  m.ee = m.se / (p + cfg.p_c);

  const double harvested = (1.0 - b) * cfg.eh_efficiency * p * std::norm(chan.f[alloc.tag_idx]);
  m.tag_harvest_ok = harvested >= cfg.p_tag_circuit;
  m.rate_ok = m.r1 >= cfg.r_min && m.r2 >= cfg.r_min;
  m.feasible = m.tag_harvest_ok && m.rate_ok;
  return m;
}

LinkMetrics evaluate(const SystemConfig& cfg, const ChannelRealization& chan, const PhaseAction& phases,
                     const AllocAction& alloc) {
  phases.check(cfg.k_ris, cfg.phase_levels);
  return evaluate_with_gain(cfg, chan, std::norm(effective_ris_channel(chan.h_br, chan.h_ru, phases)), alloc);
}

double objective(const LinkMetrics& metrics, Objective mode, double penalty) {
  if (!metrics.feasible) return penalty;
  return mode == Objective::ee ? metrics.ee : metrics.se;
}

}  // namespace risbc
