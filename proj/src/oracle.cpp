#include "risbc/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "risbc/agents.hpp"
#include "risbc/errors.hpp"

namespace risbc {

namespace {

// Relative slack below which a candidate does not count as an improvement;
// keeps rounding noise from cycling the ascent.
constexpr double kImprovementTol = 1e-12;

OracleResult finish(const SystemConfig& cfg, const ChannelRealization& chan, PhaseAction phases,
                    const AllocAction& alloc, Objective mode, std::size_t iterations) {
  OracleResult r;
  r.metrics = evaluate(cfg, chan, phases, alloc);
  r.objective_value = objective(r.metrics, mode, cfg.learning.penalty);
  r.phases = std::move(phases);
  r.alloc = alloc;
  r.iterations = iterations;
  return r;
}

}  // namespace

PhaseAction rounded_alignment(std::span<const cplx> h_br, std::span<const cplx> h_ru, int levels) {
  if (levels < 2) throw ActionError("phase oracle needs at least 2 levels");
  const std::vector<double> theta = aligned_phases(h_br, h_ru);
  const double step = 2.0 * std::numbers::pi / levels;
  PhaseAction phases{std::vector<int>(theta.size()), levels};
  for (std::size_t k = 0; k < theta.size(); ++k)
    phases.levels[k] = static_cast<int>(std::lround(theta[k] / step)) % levels;
  return phases;
}

std::size_t coordinate_ascent(std::span<const cplx> h_br, std::span<const cplx> h_ru, PhaseAction& phases) {
  const std::size_t k_ris = h_br.size();
  if (h_ru.size() != k_ris || phases.levels.size() != k_ris) throw ShapeError("coordinate_ascent: length mismatch");
  const int levels = phases.num_levels;

  std::vector<cplx> rotation(static_cast<std::size_t>(levels));
  for (int l = 0; l < levels; ++l) rotation[static_cast<std::size_t>(l)] = std::polar(1.0, 2.0 * std::numbers::pi * l / levels);

  std::vector<cplx> term(k_ris);
  cplx sum{0.0, 0.0};
  for (std::size_t k = 0; k < k_ris; ++k) {
    term[k] = h_br[k] * h_ru[k] * rotation[static_cast<std::size_t>(phases.levels[k])];
    sum += term[k];
  }

  std::size_t passes = 0;
  bool improved = true;
  while (improved) {
    improved = false;
    ++passes;
    for (std::size_t k = 0; k < k_ris; ++k) {
      const cplx rest = sum - term[k];
      const cplx cascade = h_br[k] * h_ru[k];
      double best = std::abs(sum);
      int best_level = phases.levels[k];
      for (int l = 0; l < levels; ++l) {
        const double candidate = std::abs(rest + cascade * rotation[static_cast<std::size_t>(l)]);
        if (candidate > best * (1.0 + kImprovementTol)) {
          best = candidate;
          best_level = l;
        }
      }
      if (best_level != phases.levels[k]) {
        phases.levels[k] = best_level;
        term[k] = cascade * rotation[static_cast<std::size_t>(best_level)];
        sum = rest + term[k];
        improved = true;
      }
    }
  }
  return passes;
}

PhaseAction reference_sweep(std::span<const cplx> h_br, std::span<const cplx> h_ru, int levels) {
  if (levels < 2) throw ActionError("phase oracle needs at least 2 levels");
  if (h_br.size() != h_ru.size()) throw ShapeError("reference_sweep: length mismatch");
  const std::size_t k_ris = h_br.size();
  const double two_pi = 2.0 * std::numbers::pi;
  const double step = two_pi / levels;

  std::vector<double> angle(k_ris);
  for (std::size_t k = 0; k < k_ris; ++k) angle[k] = std::arg(h_br[k] * h_ru[k]);

  // Element k switches level where (phi - angle_k) / step crosses a
  // half-integer; between consecutive switch points the assignment is fixed.
  std::vector<double> cuts;
  cuts.reserve(k_ris * static_cast<std::size_t>(levels));
  for (std::size_t k = 0; k < k_ris; ++k) {
    for (int j = 0; j < levels; ++j) {
      double c = std::fmod(angle[k] + (j + 0.5) * step, two_pi);
      if (c < 0.0) c += two_pi;
      cuts.push_back(c);
    }
  }
  std::sort(cuts.begin(), cuts.end());

  // Start from phi = 0 so that, among equally strong vectors, the one
  // aligned with the real axis is kept.
  PhaseAction best = rounded_alignment(h_br, h_ru, levels);
  double best_gain = std::abs(effective_ris_channel(h_br, h_ru, best));
  PhaseAction candidate = best;
  for (std::size_t i = 0; i < cuts.size(); ++i) {
    const double next = i + 1 < cuts.size() ? cuts[i + 1] : cuts.front() + two_pi;
    const double phi = 0.5 * (cuts[i] + next);
    for (std::size_t k = 0; k < k_ris; ++k) {
      long l = std::lround((phi - angle[k]) / step) % levels;
      if (l < 0) l += levels;
      candidate.levels[k] = static_cast<int>(l);
    }
    const double gain = std::abs(effective_ris_channel(h_br, h_ru, candidate));
    if (gain > best_gain * (1.0 + kImprovementTol)) {
      best_gain = gain;
      best = candidate;
    }
  }
  return best;
}

PhaseAction phase_oracle(std::span<const cplx> h_br, std::span<const cplx> h_ru, int levels) {
  PhaseAction phases = reference_sweep(h_br, h_ru, levels);
  coordinate_ascent(h_br, h_ru, phases);
  return phases;
}

PhaseAction phase_oracle(const ChannelRealization& chan, int levels) {
  return phase_oracle(chan.h_br, chan.h_ru, levels);
}

OracleResult alloc_oracle(const SystemConfig& cfg, const ChannelRealization& chan, const PhaseAction& phases,
                          Objective mode) {
  phases.check(cfg.k_ris, cfg.phase_levels);
  const double h2_power = std::norm(effective_ris_channel(chan.h_br, chan.h_ru, phases));
  const AllocSpace space = AllocSpace::from(cfg);

  std::size_t best_id = 0;
  double best_value = 0.0;
  for (std::size_t id = 0; id < space.size(); ++id) {
    const LinkMetrics m = evaluate_with_gain(cfg, chan, h2_power, space.decode(id));
    const double value = objective(m, mode, cfg.learning.penalty);
    if (!std::isfinite(value)) throw NumericalError("non-finite objective in allocation search");
    if (id == 0 || value > best_value) {
      best_value = value;
      best_id = id;
    }
  }
  return finish(cfg, chan, phases, space.decode(best_id), mode, space.size());
}

OracleResult joint_oracle(const SystemConfig& cfg, const ChannelRealization& chan, Objective mode) {
  return alloc_oracle(cfg, chan, phase_oracle(chan, static_cast<int>(cfg.phase_levels)), mode);
}

OracleResult baseline_random(const SystemConfig& cfg, const ChannelRealization& chan, Rng& rng, Objective mode) {
  PhaseAction phases{std::vector<int>(cfg.k_ris), static_cast<int>(cfg.phase_levels)};
  for (int& level : phases.levels) level = static_cast<int>(rng.uniform_index(cfg.phase_levels));
  const AllocSpace space = AllocSpace::from(cfg);
  const AllocAction alloc = space.decode(rng.uniform_index(space.size()));
  return finish(cfg, chan, std::move(phases), alloc, mode, 1);
}

OracleResult baseline_fixed(const SystemConfig& cfg, const ChannelRealization& chan, Objective mode) {
  PhaseAction phases{std::vector<int>(cfg.k_ris, 0), static_cast<int>(cfg.phase_levels)};
  const AllocSpace space = AllocSpace::from(cfg);
  AllocAction alloc;
  alloc.alpha_idx = space.alphas / 2;
  alloc.beta_idx = space.betas / 2;
  alloc.tag_idx = 0;
  alloc.power_idx = space.powers - 1;
  return finish(cfg, chan, std::move(phases), alloc, mode, 1);
}

}  // namespace risbc
