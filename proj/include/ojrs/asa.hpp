#pragma once

// Adaptive simulated annealing over integer offloading vectors.
//
// Neighbours come from channel-guided mutation: gene i keeps its placement
// with probability h_{i,a_i} / sum_j h_ij, so UEs already on a strong link
// tend to stay. The iteration budget grows by one while the policy loss
// keeps dropping by at least epsilon per training event and shrinks by one
// otherwise, never below one.

#include "ojrs/allocator.hpp"
#include "ojrs/mec_model.hpp"
#include "ojrs/random.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace ojrs {

struct AsaConfig {
  double t0 = 1.0;             // initial temperature, objective units (s)
  double cooling = 0.95;       // geometric factor phi
  std::size_t t_sa_init = 20;  // initial iteration budget
  double epsilon = 0.02;       // loss-decrease threshold
  std::size_t t_sa_max = 100;  // budget ceiling

  void validate() const {
    if (!(t0 > 0.0)) throw std::invalid_argument("asa: t0 must be positive");
    if (!(cooling > 0.0 && cooling < 1.0)) throw std::invalid_argument("asa: cooling factor must be in (0,1)");
    if (t_sa_init < 1 || t_sa_max < t_sa_init) throw std::invalid_argument("asa: need 1 <= t_sa_init <= t_sa_max");
  }
};

struct AsaState {
  std::size_t budget = 20;
};

inline double mutation_prob(const ChannelState& channel, const OffloadDecision& a, std::size_t i) {
  const std::size_t m = channel.n_mecs;
  if (a[i] == 0) return 1.0 / static_cast<double>(m + 1);
  double total = 0.0;
  for (std::size_t j = 0; j < m; ++j) total += channel.gain(i, j);
  return channel.gain(i, static_cast<std::size_t>(a[i] - 1)) / total;
}

// Gene i is redrawn uniformly from {0..M} when rand > P_i, else kept. If
// nothing changed, one uniformly chosen gene is forced to a different value.
inline OffloadDecision h_mutate(const OffloadDecision& a, const ChannelState& channel, Rng& rng,
                                bool force_change = true) {
  const std::size_t m = channel.n_mecs;
  OffloadDecision out = a;
  std::uniform_int_distribution<int> placement(0, static_cast<int>(m));
  for (std::size_t i = 0; i < a.size(); ++i)
    if (uniform01(rng) > mutation_prob(channel, a, i)) out[i] = placement(rng);
  if (force_change && out == a) {
    const std::size_t i = uniform_index(rng, a.size());
    std::uniform_int_distribution<int> other(1, static_cast<int>(m));
    out[i] = (a[i] + other(rng)) % static_cast<int>(m + 1);
  }
  return out;
}

// Boltzmann rule for a minimization objective.
inline bool accept(double f_old, double f_new, double temperature, Rng& rng) {
  if (!(temperature > 0.0)) throw std::invalid_argument("accept: temperature must be positive");
  return std::exp((f_old - f_new) / temperature) > uniform01(rng);
}

inline std::size_t adapt_budget(AsaState& state, double delta_loss, double epsilon, std::size_t t_sa_max) {
  if (delta_loss >= epsilon)
    state.budget += 1;
  else if (state.budget != 1)
    state.budget -= 1;
  else
    state.budget = 1;
  state.budget = std::clamp<std::size_t>(state.budget, 1, std::max<std::size_t>(t_sa_max, 1));
  return state.budget;
}

struct AsaResult {
  OffloadDecision best;
  double best_objective = 0.0;
  double initial_objective = 0.0;
  std::vector<double> best_trace;  // best-so-far objective after each iteration
};

inline AsaResult search(const OffloadDecision& initial, const ChannelState& channel, const PlacementCosts& costs,
                        const AsaConfig& cfg, std::size_t budget, Rng& rng) {
  AsaResult r;
  OffloadDecision current = initial;
  double f_current = costs.latency(current);
  r.best = current;
  r.best_objective = r.initial_objective = f_current;
  r.best_trace.reserve(budget);
  double temperature = cfg.t0;
  for (std::size_t g = 0; g < budget; ++g) {
    temperature *= cfg.cooling;
    auto neighbour = h_mutate(current, channel, rng);
    const double f_new = costs.latency(neighbour);
    if (accept(f_current, f_new, temperature, rng)) {
      current = std::move(neighbour);
      f_current = f_new;
      if (f_current < r.best_objective) {
        r.best = current;
        r.best_objective = f_current;
      }
    }
    r.best_trace.push_back(r.best_objective);
  }
  return r;
}

inline AsaResult search(const OffloadDecision& initial, const ChannelState& channel, const Scenario& scenario,
                        const AsaConfig& cfg, const AsaState& state, Rng& rng) {
  initial.validate(scenario.num_ues(), scenario.num_mecs());
  return search(initial, channel, PlacementCosts(scenario, channel), cfg, state.budget, rng);
}

}  // namespace ojrs
