#pragma once

#include <cstddef>
#include <string>

#include "risbc/channel.hpp"
#include "risbc/config.hpp"

namespace risbc {

enum class Objective { ee, se };

Objective parse_objective(const std::string& name);  // "ee" | "se"
std::string to_string(Objective mode);

// Indices into the configured grids. power_idx is used only when
// cfg.power_grid is non-empty.
struct AllocAction {
  std::size_t alpha_idx = 0;  // U1 power share alpha1 = alpha_grid[alpha_idx]; alpha2 = 1 - alpha1
  std::size_t beta_idx = 0;   // reflection coefficient of the selected tag
  std::size_t tag_idx = 0;
  std::size_t power_idx = 0;

  void check(const SystemConfig& cfg) const;  // throws ActionError

  friend bool operator==(const AllocAction&, const AllocAction&) = default;
};

struct LinkMetrics {
  double sinr1 = 0.0;   // U1 own stream
  double sinr2 = 0.0;   // U2 stream (received through the RIS)
  double sinr_b = 0.0;  // backscatter stream at U1
  double r1 = 0.0, r2 = 0.0, r_b = 0.0;
  double se = 0.0;
  double ee = 0.0;
  double power = 0.0;  // transmit power actually used
  bool tag_harvest_ok = false;
  bool rate_ok = false;
  bool feasible = false;
};

// Transmit power implied by an action: p_max, or power_grid[power_idx].
double transmit_power(const SystemConfig& cfg, const AllocAction& alloc);

// Layered SIC at U1: U2's stream is decoded first and cancelled with residual
// beta_sic; U1's own stream sees that residual plus the backscatter signal;
// the backscatter stream sees beta_sic of the whole NOMA signal. U2 decodes
// its stream treating U1's share as interference.
//   SINR2  = a2 P |h2|^2 / (a1 P |h2|^2 + s2)
//   SINR1  = a1 P |h1|^2 / (beta_sic a2 P |h1|^2 + b P |c_m|^2 + s2)
//   SINR_b = b P |c_m|^2 / (beta_sic P |h1|^2 + s2)
LinkMetrics evaluate(const SystemConfig& cfg, const ChannelRealization& chan, const PhaseAction& phases,
                     const AllocAction& alloc);

// Same model with |h2_eff|^2 supplied by the caller.
LinkMetrics evaluate_with_gain(const SystemConfig& cfg, const ChannelRealization& chan, double h2_power,
                               const AllocAction& alloc);

// EE or SE when feasible, the penalty otherwise.
double objective(const LinkMetrics& metrics, Objective mode, double penalty = -1.0);

}  // namespace risbc
