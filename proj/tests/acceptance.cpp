// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. `risbc_acceptance 3 5` runs only criteria 3 and 5.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>
#include <string>

#include "risbc/agents.hpp"
#include "risbc/experiment.hpp"
#include "risbc/oracle.hpp"
#include "test_util.hpp"

using namespace risbc;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

PhaseAction random_phases(std::size_t k_ris, int levels, Rng& rng) {
  PhaseAction p{std::vector<int>(k_ris), levels};
  for (int& l : p.levels) l = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(levels)));
  return p;
}

double gain(const ChannelRealization& chan, const PhaseAction& p) {
  return std::abs(effective_ris_channel(chan.h_br, chan.h_ru, p));
}

// Depth-first enumeration of all L^K level vectors on running partial sums.
double exhaustive_best(const ChannelRealization& chan, int levels) {
  std::vector<cplx> rot(static_cast<std::size_t>(levels));
  for (int l = 0; l < levels; ++l) rot[static_cast<std::size_t>(l)] = std::polar(1.0, 2.0 * std::numbers::pi * l / levels);
  const std::size_t k_ris = chan.h_br.size();
  double best = 0.0;
  std::function<void(std::size_t, cplx)> walk = [&](std::size_t k, cplx partial) {
    if (k == k_ris) {
      best = std::max(best, std::abs(partial));
      return;
    }
    const cplx c = chan.cascade(k);
    for (const cplx& r : rot) walk(k + 1, partial + c * r);
  };
  walk(0, 0.0);
  return best;
}

// ---------------------------------------------------------------------------

Verdict gradient_oracle() {
  Rng rng(101);
  double worst = 0.0;
  const int nets = 60;
  for (int trial = 0; trial < nets; ++trial) {
    std::vector<std::size_t> dims{1 + rng.uniform_index(5)};
    const std::size_t hidden = 1 + rng.uniform_index(3);
    for (std::size_t h = 0; h < hidden; ++h) dims.push_back(1 + rng.uniform_index(8));
    dims.push_back(1 + rng.uniform_index(5));
    Mlp net(dims, rng);
    std::vector<double> x;
    do {
      x = testing::uniform_vector(dims.front(), rng, 2.0);
    } while (testing::min_hidden_margin(net, x) < 1e-3);
    const auto target = testing::uniform_vector(dims.back(), rng, 2.0);
    const std::vector<double> mask(dims.back(), 1.0);
    const auto lg = net.backward_mse(x, target);
    worst = std::max(worst, testing::max_gradient_error(net, lg.grads, x, target, mask));
  }
  return {worst < 1e-4, fmt("max relative error %.3g over %d random nets (limit 1e-4)", worst, nets)};
}

Verdict phase_physics() {
  SystemConfig cfg = desk_config();
  Rng rng(102);
  double excess = -INFINITY, align_err = 0.0, offset_err = 0.0;
  for (int i = 0; i < 10000; ++i) {
    cfg.k_ris = 1 + rng.uniform_index(32);
    const auto chan = sample_realization(cfg, rng);
    const auto phases = random_phases(cfg.k_ris, 8, rng);
    const double bound = aligned_phase_bound(chan.h_br, chan.h_ru);
    excess = std::max(excess, gain(chan, phases) - bound);

    const auto theta = aligned_phases(chan.h_br, chan.h_ru);
    const double aligned = std::abs(effective_ris_channel(chan.h_br, chan.h_ru, theta));
    if (bound > 0.0) align_err = std::max(align_err, std::abs(aligned - bound) / bound);

    std::vector<double> rad(cfg.k_ris), shifted(cfg.k_ris);
    const double offset = 2.0 * std::numbers::pi * rng.uniform();
    for (std::size_t k = 0; k < cfg.k_ris; ++k) {
      rad[k] = phases.radians(k);
      shifted[k] = rad[k] + offset;
    }
    offset_err = std::max(offset_err, std::abs(std::abs(effective_ris_channel(chan.h_br, chan.h_ru, shifted)) -
                                               std::abs(effective_ris_channel(chan.h_br, chan.h_ru, rad))));
  }
  const bool pass = excess <= 1e-12 && align_err <= 1e-9 && offset_err <= 1e-12;
  return {pass, fmt("(a) max |h2|-bound %.3g (limit 1e-12); (b) alignment rel. error %.3g (limit 1e-9); "
                    "(c) offset change %.3g (limit 1e-12)",
                    excess, align_err, offset_err)};
}

Verdict oracle_exactness() {
  SystemConfig cfg = desk_config();
  Rng rng(103);
  int matches = 0, mismatches_local = 0;
  const int draws = 1000;
  for (int i = 0; i < draws; ++i) {
    cfg.k_ris = 1 + static_cast<std::size_t>(i % 6);
    const auto chan = sample_realization(cfg, rng);
    const PhaseAction p = phase_oracle(chan, 8);
    const double found = gain(chan, p);
    if (found >= exhaustive_best(chan, 8) * (1.0 - 1e-12)) {
      ++matches;
      continue;
    }
    bool local = true;
    for (std::size_t k = 0; k < cfg.k_ris && local; ++k) {
      PhaseAction q = p;
      for (int l = 0; l < 8; ++l) {
        q.levels[k] = l;
        if (gain(chan, q) > found * (1.0 + 1e-12)) local = false;
      }
    }
    if (local) ++mismatches_local;
  }
  const int mismatches = draws - matches;

  cfg = desk_config();
  int alloc_agree = 0;
  for (int i = 0; i < 100; ++i) {
    const auto chan = sample_realization(cfg, rng);
    const PhaseAction phases = phase_oracle(chan, 8);
    const double h2_sq = std::norm(effective_ris_channel(chan.h_br, chan.h_ru, phases));
    bool agree = true;
    for (Objective mode : {Objective::ee, Objective::se}) {
      double best = -INFINITY;
      AllocAction arg;
      for (std::size_t a = 0; a < cfg.alpha_grid.size(); ++a)
        for (std::size_t b = 0; b < cfg.beta_grid.size(); ++b)
          for (std::size_t m = 0; m < cfg.m_tags; ++m) {
            const double v =
                testing::naive_objective(cfg, chan, h2_sq, cfg.alpha_grid[a], cfg.beta_grid[b], m, mode);
            if (v > best) {
              best = v;
              arg = AllocAction{a, b, m, 0};
            }
          }
      const auto r = alloc_oracle(cfg, chan, phases, mode);
      agree = agree && r.alloc == arg && std::abs(r.objective_value - best) <= 1e-12 * std::max(1.0, std::abs(best));
    }
    if (agree) ++alloc_agree;
  }
  const bool pass = matches * 100 >= draws * 99 && mismatches_local == mismatches && alloc_agree == 100;
  return {pass, fmt("phase oracle = exhaustive on %d/%d draws (K=1..6, L=8), %d/%d mismatches are local optima; "
                    "allocation oracle = brute force on %d/100",
                    matches, draws, mismatches_local, mismatches, alloc_agree)};
}

Verdict quantization_quality() {
  const SystemConfig cfg = desk_config();
  Rng rng(104);
  double sum = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const auto chan = sample_realization(cfg, rng);
    sum += gain(chan, phase_oracle(chan, 8)) / aligned_phase_bound(chan.h_br, chan.h_ru);
  }
  const double mean = sum / 10000.0;
  return {mean >= 0.95, fmt("mean |h2(oracle)|/bound %.4f over 10^4 draws (limit 0.95)", mean)};
}

std::vector<double> oracle_curve(SystemConfig cfg, SweepAxis axis, std::vector<double> values, Objective mode,
                                 std::uint64_t seed) {
  SweepSpec spec;
  spec.axis = axis;
  spec.values = std::move(values);
  spec.realizations_per_point = 2000;
  spec.policies = {Policy::oracle};
  spec.mode = mode;
  spec.seed = seed;
  std::vector<double> means;
  for (const auto& row : sweep(spec, cfg, nullptr)) means.push_back(row.mean);
  return means;
}

std::string curve_text(const std::vector<double>& v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : " ") + fmt("%.4f", x);
  return "[" + s + "]";
}

Verdict ee_versus_power() {
  SystemConfig low = desk_config(), high = desk_config();
  low.p_c = 0.01;
  high.p_c = 0.1;
  const std::vector<double> p{0.5, 1.0, 2.0, 4.0};
  const auto a = oracle_curve(low, SweepAxis::p_max, p, Objective::ee, 105);
  const auto b = oracle_curve(high, SweepAxis::p_max, p, Objective::ee, 105);
  bool pass = true;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i > 0) pass = pass && a[i] < a[i - 1] && b[i] < b[i - 1];
    pass = pass && a[i] > b[i];
  }
  return {pass, fmt("oracle mean EE over p_max {0.5,1,2,4}: p_c=0.01 %s, p_c=0.1 %s", curve_text(a).c_str(),
                    curve_text(b).c_str())};
}

Verdict ee_versus_tags() {
  const auto m = oracle_curve(desk_config(), SweepAxis::m_tags, {2.0, 4.0, 8.0}, Objective::ee, 106);
  const bool pass = m[1] >= m[0] && m[2] >= m[1];
  return {pass, fmt("oracle mean EE over M {2,4,8} at p_max=1: %s", curve_text(m).c_str())};
}

Verdict se_versus_power() {
  const std::vector<double> p{0.5, 1.0, 2.0, 4.0};
  SystemConfig m4 = desk_config(), m8 = desk_config();
  m8.m_tags = 8;
  const auto a = oracle_curve(m4, SweepAxis::p_max, p, Objective::se, 107);
  const auto b = oracle_curve(m8, SweepAxis::p_max, p, Objective::se, 107);
  bool pass = true;
  for (std::size_t i = 1; i < p.size(); ++i) pass = pass && a[i] > a[i - 1];
  for (std::size_t i = 2; i < p.size(); ++i) pass = pass && a[i] - a[i - 1] < a[i - 1] - a[i - 2];
  for (std::size_t i = 0; i < p.size(); ++i) pass = pass && b[i] >= a[i];
  return {pass, fmt("oracle mean SE over p_max {0.5,1,2,4}: M=4 %s, M=8 %s", curve_text(a).c_str(),
                    curve_text(b).c_str())};
}

fs::path work_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "risbc_acceptance";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

// Desk training shared by criteria 8 and 10.
const fs::path& trained_checkpoints() {
  static const fs::path dir = [] {
    const fs::path d = work_dir() / "desk_train";
    run_train(desk_config(), Objective::ee, 2024, d);
    return d;
  }();
  return dir;
}

Verdict learning_works() {
  const auto t0 = std::chrono::steady_clock::now();
  const SystemConfig cfg = desk_config();
  const TrainedPair agents = load_agents(trained_checkpoints(), cfg);
  const double train_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  Rng env(derive_seed(2024, 100)), pick(derive_seed(2024, 101));
  double agent_gain = 0.0, oracle_gain = 0.0, agent_alloc = 0.0, oracle_alloc = 0.0, dqn = 0.0, random = 0.0;
  const std::size_t n = cfg.learning.test_samples;
  Rng unused(0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto chan = sample_realization(cfg, env);
    const JointDecision d = greedy_decision(agents.phase, agents.alloc, chan);
    const PhaseAction best = phase_oracle(chan, static_cast<int>(cfg.phase_levels));
    agent_gain += gain(chan, d.phases);
    oracle_gain += gain(chan, best);

    const AllocAction a = agents.alloc.act(alloc_features(chan, best), 0.0, unused);
    agent_alloc += objective(evaluate(cfg, chan, best, a), Objective::ee, cfg.learning.penalty);
    oracle_alloc += alloc_oracle(cfg, chan, best, Objective::ee).objective_value;

    dqn += objective(evaluate(cfg, chan, d.phases, d.alloc), Objective::ee, cfg.learning.penalty);
    random += baseline_random(cfg, chan, pick, Objective::ee).objective_value;
  }
  const double ra = agent_gain / oracle_gain, rb = agent_alloc / oracle_alloc, rc = dqn / random;
  const bool pass = ra >= 0.85 && rb >= 0.85 && rc >= 1.2;
  return {pass, fmt("(a) phase |h2| ratio %.4f (limit 0.85); (b) allocation EE ratio %.4f under oracle phases "
                    "(limit 0.85); (c) joint agents / random objective %.4f (limit 1.2); %zu test draws, "
                    "training %.0f s",
                    ra, rb, rc, n, train_s)};
}

Verdict determinism() {
  SystemConfig cfg = desk_config();
  cfg.learning.train_samples = 4000;
  const fs::path a = work_dir() / "det_a", b = work_dir() / "det_b";
  run_train(cfg, Objective::ee, 7, a);
  run_train(cfg, Objective::ee, 7, b);
  SweepSpec spec;
  spec.axis = SweepAxis::p_max;
  spec.values = {0.5, 1.0, 2.0, 4.0};
  spec.realizations_per_point = 500;
  spec.policies = {Policy::dqn, Policy::oracle, Policy::random, Policy::fixed};
  spec.seed = 7;
  run_sweep(spec, cfg, a, a);
  run_sweep(spec, cfg, a, b);
  bool pass = true;
  std::string files;
  for (const char* f : {"training_log.csv", "sweep.csv", "phase_agent.json", "alloc_agent.json"}) {
    const std::string x = slurp(a / f), y = slurp(b / f);
    pass = pass && !x.empty() && x == y;
    files += std::string(files.empty() ? "" : ", ") + f;
  }
  return {pass, "byte-identical reruns of " + files + " (train 4000 samples, sweep 4 points x 500 draws)"};
}

Verdict definitional_identity() {
  const SystemConfig cfg = desk_config();
  const fs::path out = work_dir() / "identity_eval";
  run_eval(cfg, Objective::ee, {Policy::dqn, Policy::oracle, Policy::random, Policy::fixed}, trained_checkpoints(),
           cfg.learning.test_samples, 31, out);
  const auto rows = parse_eval_rows_csv(slurp(out / "eval_rows.csv"));
  double worst = 0.0;
  for (const auto& r : rows) worst = std::max(worst, std::abs(r.ee * (cfg.p_max + cfg.p_c) - r.se));
  return {!rows.empty() && worst <= 1e-12,
          fmt("max |ee*(p_max+p_c) - se| %.3g over %zu emitted rows (limit 1e-12)", worst, rows.size())};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, Verdict (*)()>> criteria{
      {"gradient oracle", gradient_oracle},
      {"phase physics", phase_physics},
      {"oracle exactness", oracle_exactness},
      {"quantization quality", quantization_quality},
      {"EE falls with transmit power", ee_versus_power},
      {"EE grows with tags", ee_versus_tags},
      {"SE grows with transmit power", se_versus_power},
      {"learning works", learning_works},
      {"determinism", determinism},
      {"definitional identity", definitional_identity},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.contains(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %2d %s  %s: %s [%.1f s]\n", id, v.pass ? "PASS" : "FAIL", criteria[i].first,
                v.detail.c_str(), secs);
    std::fflush(stdout);
    if (!v.pass) ++failed;
  }
  fs::remove_all(work_dir());
  return failed == 0 ? 0 : 1;
}
