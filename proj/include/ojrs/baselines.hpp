#pragma once

// Reference strategies the learned scheduler is compared against, and the
// particle-swarm oracle used as the normalized-reward denominator.

#include "ojrs/allocator.hpp"
#include "ojrs/asa.hpp"
#include "ojrs/mec_model.hpp"
#include "ojrs/random.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>
#include <vector>

namespace ojrs {

// A server is short of compute when its equal share F_j / |S_j| would make a
// member's execution slower than running locally. Such members move to local
// execution, most demanding task first, until no server is short.
inline void apply_capacity_fallback(const Scenario& s, OffloadDecision& d) {
  const std::size_t m = s.num_mecs();
  for (std::size_t j = 1; j <= m; ++j) {
    for (;;) {
      std::size_t members = 0;
      for (std::size_t i = 0; i < d.size(); ++i) members += static_cast<std::size_t>(d[i]) == j;
      if (members == 0) break;
      const double share = s.mecs[j - 1].f_mec_max / static_cast<double>(members);
      bool short_of_compute = false;
      std::size_t heaviest = d.size();
      for (std::size_t i = 0; i < d.size(); ++i) {
        if (static_cast<std::size_t>(d[i]) != j) continue;
        const auto& ue = s.ues[i];
        if (ue.task.cycles / share > ue.task.cycles / local_capacity(ue)) short_of_compute = true;
        if (heaviest == d.size() || ue.task.cycles > s.ues[heaviest].task.cycles) heaviest = i;
      }
      if (!short_of_compute) break;
      d[heaviest] = 0;
    }
  }
}

// Nearest server (lowest index on ties), then the capacity fallback.
inline OffloadDecision greedy_baseline(const Scenario& s, const ChannelState& /*channel*/) {
  OffloadDecision d;
  d.assign.resize(s.num_ues());
  for (std::size_t i = 0; i < s.num_ues(); ++i) {
    std::size_t best = 0;
    double best_r = distance(s.ues[i], s.mecs[0], s.radio.min_distance);
    for (std::size_t j = 1; j < s.num_mecs(); ++j) {
      const double r = distance(s.ues[i], s.mecs[j], s.radio.min_distance);
      if (r < best_r) {
        best_r = r;
        best = j;
      }
    }
    d[i] = static_cast<int>(best + 1);
  }
  apply_capacity_fallback(s, d);
  return d;
}

inline OffloadDecision random_baseline(const Scenario& s, const ChannelState& /*channel*/, Rng& rng) {
  OffloadDecision d;
  d.assign.resize(s.num_ues());
  std::uniform_int_distribution<int> pick(0, static_cast<int>(s.num_mecs()));
  for (auto& a : d.assign) a = pick(rng);
  apply_capacity_fallback(s, d);
  return d;
}

// Annealing from a random start with a fixed budget, no learning.
inline OffloadDecision asa_only(const Scenario& s, const ChannelState& channel, const AsaConfig& cfg,
                                std::size_t budget, Rng& rng) {
  OffloadDecision start;
  start.assign.resize(s.num_ues());
  std::uniform_int_distribution<int> pick(0, static_cast<int>(s.num_mecs()));
  for (auto& a : start.assign) a = pick(rng);
  return search(start, channel, PlacementCosts(s, channel), cfg, budget, rng).best;
}

struct PsoConfig {
  std::size_t particles = 50;
  std::size_t iterations = 300;
  double inertia = 0.72;
  double cognitive = 1.49;
  double social = 1.49;
};

// Moves one UE at a time to its best placement until no single move helps.
inline double single_move_descent(std::vector<int>& a, std::size_t n_mecs, const PlacementCosts& costs) {
  double f = costs.latency(a);
  for (bool improved = true; improved;) {
    improved = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const int keep = a[i];
      int best = keep;
      for (int j = 0; j <= static_cast<int>(n_mecs); ++j) {
        if (j == keep) continue;
        a[i] = j;
        const double g = costs.latency(a);
        if (g < f) {
          f = g;
          best = j;
        }
      }
      a[i] = best;
      improved |= best != keep;
    }
  }
  return f;
}

// Discrete PSO: continuous positions in [-0.5, M + 0.5], decoded by rounding
// and clamping to {0..M}. Each new swarm best is polished by single moves,
// and a swarm that stops improving is re-scattered around the kept best.
inline OffloadDecision pso_oracle(const Scenario& s, const ChannelState& channel, const PsoConfig& cfg, Rng& rng) {
  const std::size_t n = s.num_ues();
  const std::size_t m = s.num_mecs();
  const double hi = static_cast<double>(m) + 0.5;
  const double lo = -0.5;
  const double vmax = hi - lo;
  const PlacementCosts costs(s, channel);
  const std::size_t np = std::max<std::size_t>(cfg.particles, 1);
  const std::size_t patience = std::max<std::size_t>(cfg.iterations / 10, 5);

  auto decode = [&](const std::vector<double>& x, std::vector<int>& out) {
    for (std::size_t i = 0; i < n; ++i)
      out[i] = static_cast<int>(std::clamp(std::lround(x[i]), 0L, static_cast<long>(m)));
  };

  std::vector<std::vector<double>> pos(np, std::vector<double>(n)), vel(np, std::vector<double>(n));
  std::vector<std::vector<double>> pbest(np);
  std::vector<double> pbest_f(np);
  std::vector<double> gbest(n);
  double gbest_f = std::numeric_limits<double>::infinity();
  std::vector<int> code(n);
  std::uniform_real_distribution<double> init_pos(lo, hi), init_vel(-0.5 * vmax, 0.5 * vmax);

  auto offer = [&](std::size_t p, double f) {
    if (f < pbest_f[p]) {
      pbest_f[p] = f;
      pbest[p] = pos[p];
    }
    if (f < gbest_f) {
      const double g = single_move_descent(code, m, costs);
      gbest_f = g;
      for (std::size_t i = 0; i < n; ++i) gbest[i] = code[i];
      return true;
    }
    return false;
  };
  auto scatter = [&] {
    for (std::size_t p = 0; p < np; ++p) {
      for (std::size_t i = 0; i < n; ++i) {
        pos[p][i] = init_pos(rng);
        vel[p][i] = init_vel(rng);
      }
      pbest_f[p] = std::numeric_limits<double>::infinity();
      decode(pos[p], code);
      offer(p, costs.latency(code));
    }
  };

  scatter();
  std::size_t stale = 0;
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    bool improved = false;
    for (std::size_t p = 0; p < np; ++p) {
      for (std::size_t i = 0; i < n; ++i) {
        const double r1 = uniform01(rng), r2 = uniform01(rng);
        double v = cfg.inertia * vel[p][i] + cfg.cognitive * r1 * (pbest[p][i] - pos[p][i]) +
                   cfg.social * r2 * (gbest[i] - pos[p][i]);
        v = std::clamp(v, -vmax, vmax);
        vel[p][i] = v;
        pos[p][i] = std::clamp(pos[p][i] + v, lo, hi);
      }
      decode(pos[p], code);
      improved |= offer(p, costs.latency(code));
    }
    stale = improved ? 0 : stale + 1;
    if (stale >= patience) {
      scatter();
      stale = 0;
    }
  }
  OffloadDecision d;
  d.assign.resize(n);
  decode(gbest, d.assign);
  return d;
}

// Normalized reward rate, clamped to [0, 1.0001]; values above one mean the
// oracle was beaten and are reported on stderr.
inline double nrr(double inferred_reward, double optimal_reward, bool warn = true) {
  if (!(optimal_reward > 0.0)) throw std::invalid_argument("nrr: optimal reward must be positive");
  const double r = inferred_reward / optimal_reward;
  if (r > 1.0 && warn) std::cerr << "warning: NRR " << r << " exceeds 1 (oracle suboptimal)\n";
  return std::clamp(r, 0.0, 1.0001);
}

}  // namespace ojrs
