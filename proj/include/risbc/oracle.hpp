#pragma once

#include <cstddef>
#include <span>

#include "risbc/channel.hpp"
#include "risbc/config.hpp"
#include "risbc/link.hpp"
#include "risbc/rng.hpp"

namespace risbc {

struct OracleResult {
  PhaseAction phases;
  AllocAction alloc;
  LinkMetrics metrics;
  double objective_value = 0.0;  // objective(metrics, mode, penalty)
  std::size_t iterations = 0;    // evaluated candidates, at least 1
};

// Nearest quantized level to each continuous aligned phase.
PhaseAction rounded_alignment(std::span<const cplx> h_br, std::span<const cplx> h_ru, int levels);

// Per-element ascent on |h2_eff|: each element moves to its best level given
// the others, in element order, until a full pass accepts no move. A move is
// accepted only on strict improvement. Returns the number of passes.
std::size_t coordinate_ascent(std::span<const cplx> h_br, std::span<const cplx> h_ru, PhaseAction& phases);

// Best of the assignments "each element takes the level that best aligns it
// with reference direction phi" over all phi. An optimal vector has every
// element best aligned with the direction of its own sum, so the global
// maximiser of |h2_eff| is always among these K*L candidates (for K=0 the
// empty action). Ties keep rounded_alignment. Cost O(K^2 L).
PhaseAction reference_sweep(std::span<const cplx> h_br, std::span<const cplx> h_ru, int levels);

// reference_sweep followed by coordinate_ascent as a safeguard against
// rounding at the switch points.
PhaseAction phase_oracle(std::span<const cplx> h_br, std::span<const cplx> h_ru, int levels);
PhaseAction phase_oracle(const ChannelRealization& chan, int levels);

// Exhaustive search over every joint allocation id for the given phases.
// Returns the feasible maximiser of the objective; when nothing is feasible
// all candidates score the penalty and the lowest id wins. Ties always go to
// the lowest id.
OracleResult alloc_oracle(const SystemConfig& cfg, const ChannelRealization& chan, const PhaseAction& phases,
                          Objective mode);

// phase_oracle + alloc_oracle.
OracleResult joint_oracle(const SystemConfig& cfg, const ChannelRealization& chan, Objective mode);

// Uniform random levels and a uniform random joint allocation id.
OracleResult baseline_random(const SystemConfig& cfg, const ChannelRealization& chan, Rng& rng, Objective mode);

// All-zero phases and the mid-grid allocation (index size/2 of each grid, tag 0,
// last power level).
OracleResult baseline_fixed(const SystemConfig& cfg, const ChannelRealization& chan, Objective mode);

}  // namespace risbc
