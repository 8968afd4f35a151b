#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "risbc/config.hpp"
#include "risbc/rng.hpp"

namespace risbc {

using cplx = std::complex<double>;

// One i.i.d. draw of every channel coefficient. U2 has no direct link and
// hears only the RIS; the tags reflect toward U1 only.
struct ChannelRealization {
  cplx h1;                 // BS -> U1
  std::vector<cplx> h_br;  // BS -> RIS element k
  std::vector<cplx> h_ru;  // RIS element k -> U2
  std::vector<cplx> f;     // BS -> tag m
  std::vector<cplx> g;     // tag m -> U1

  // Per-element cascade h_br[k] * h_ru[k].
  cplx cascade(std::size_t k) const { return h_br[k] * h_ru[k]; }
  cplx tag_cascade(std::size_t m) const { return f[m] * g[m]; }
};

// Quantized RIS configuration: element k shifts by 2*pi*levels[k]/num_levels.
struct PhaseAction {
  std::vector<int> levels;
  int num_levels = 0;

  double radians(std::size_t k) const;

  // Throws ShapeError / ActionError when the action does not fit (k, L).
  void check(std::size_t k_ris, std::size_t phase_levels) const;

  friend bool operator==(const PhaseAction&, const PhaseAction&) = default;
};

// Draw order on the stream: h1, h_br[0..K), h_ru[0..K), f[0..M), g[0..M).
// Each entry is CN(0, variance of its link).
ChannelRealization sample_realization(const SystemConfig& cfg, Rng& rng);

// Coherent sum of the per-element cascades, sum_k h_br[k] e^{j theta_k} h_ru[k].
cplx effective_ris_channel(std::span<const cplx> h_br, std::span<const cplx> h_ru, const PhaseAction& phases);
cplx effective_ris_channel(std::span<const cplx> h_br, std::span<const cplx> h_ru,
                           std::span<const double> radians);

// sum_k |h_br[k]| |h_ru[k]|, the largest |h2_eff| any phase vector reaches.
double aligned_phase_bound(std::span<const cplx> h_br, std::span<const cplx> h_ru);

// Continuous phases -arg(h_br[k]) - arg(h_ru[k]) wrapped to [0, 2*pi); these
// attain aligned_phase_bound.
std::vector<double> aligned_phases(std::span<const cplx> h_br, std::span<const cplx> h_ru);

}  // namespace risbc
