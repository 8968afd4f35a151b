#include "risbc/channel.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "risbc/errors.hpp"

namespace risbc {

namespace {

void check_lengths(std::size_t a, std::size_t b, std::size_t c) {
  if (a != b || a != c)
    throw ShapeError("RIS vector lengths differ: " + std::to_string(a) + ", " + std::to_string(b) + ", " +
                     std::to_string(c));
}

double wrap_two_pi(double x) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(x, two_pi);
  if (r < 0.0) r += two_pi;
  if (r >= two_pi) r = 0.0;
  return r;
}

}  // namespace

double PhaseAction::radians(std::size_t k) const {
  return 2.0 * std::numbers::pi * static_cast<double>(levels.at(k)) / static_cast<double>(num_levels);
}

void PhaseAction::check(std::size_t k_ris, std::size_t phase_levels) const {
  if (levels.size() != k_ris)
    throw ShapeError("phase action has " + std::to_string(levels.size()) + " entries, expected " +
                     std::to_string(k_ris));
  if (num_levels != static_cast<int>(phase_levels))
    throw ActionError("phase action uses " + std::to_string(num_levels) + " levels, expected " +
                      std::to_string(phase_levels));
  for (int level : levels) {
    if (level < 0 || level >= num_levels) throw ActionError("phase level " + std::to_string(level) + " out of range");
  }
}

ChannelRealization sample_realization(const SystemConfig& cfg, Rng& rng) {
  ChannelRealization chan;
  chan.h1 = rng.complex_normal(cfg.link_vars.bs_u1);
  chan.h_br.resize(cfg.k_ris);
  chan.h_ru.resize(cfg.k_ris);
  chan.f.resize(cfg.m_tags);
  chan.g.resize(cfg.m_tags);
  for (auto& h : chan.h_br) h = rng.complex_normal(cfg.link_vars.bs_ris);
  for (auto& h : chan.h_ru) h = rng.complex_normal(cfg.link_vars.ris_u2);
  for (auto& h : chan.f) h = rng.complex_normal(cfg.link_vars.bs_tag);
  for (auto& h : chan.g) h = rng.complex_normal(cfg.link_vars.tag_u1);
  return chan;
}

cplx effective_ris_channel(std::span<const cplx> h_br, std::span<const cplx> h_ru, const PhaseAction& phases) {
  check_lengths(h_br.size(), h_ru.size(), phases.levels.size());
  if (phases.num_levels < 1) throw ActionError("phase action has no levels");
  cplx sum{0.0, 0.0};
  for (std::size_t k = 0; k < h_br.size(); ++k) sum += h_br[k] * std::polar(1.0, phases.radians(k)) * h_ru[k];
  return sum;
}

cplx effective_ris_channel(std::span<const cplx> h_br, std::span<const cplx> h_ru,
                           std::span<const double> radians) {
  check_lengths(h_br.size(), h_ru.size(), radians.size());
  cplx sum{0.0, 0.0};
  for (std::size_t k = 0; k < h_br.size(); ++k) sum += h_br[k] * std::polar(1.0, radians[k]) * h_ru[k];
  return sum;
}

double aligned_phase_bound(std::span<const cplx> h_br, std::span<const cplx> h_ru) {
  check_lengths(h_br.size(), h_ru.size(), h_ru.size());
  double bound = 0.0;
  for (std::size_t k = 0; k < h_br.size(); ++k) bound += std::abs(h_br[k]) * std::abs(h_ru[k]);
  return bound;
}

std::vector<double> aligned_phases(std::span<const cplx> h_br, std::span<const cplx> h_ru) {
  check_lengths(h_br.size(), h_ru.size(), h_ru.size());
  std::vector<double> theta(h_br.size());
  for (std::size_t k = 0; k < h_br.size(); ++k) theta[k] = wrap_two_pi(-std::arg(h_br[k]) - std::arg(h_ru[k]));
  return theta;
}

}  // namespace risbc
