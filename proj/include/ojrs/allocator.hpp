#pragma once

// Exact solution of the continuous resource sub-problem for a fixed
// offloading decision.
//
// With the decision fixed, every offloading UE transmits at full power and
// every local UE runs at its largest power-feasible frequency. The remaining
// problem separates per server into
//
//   min  sum_{i in S_j} w_i F_i / f_ij   s.t.  sum_{i in S_j} f_ij <= F_j,
//
// whose KKT point is f_ij = F_j sqrt(w_i F_i) / sum_k sqrt(w_k F_k), with
// optimal value (sum_k sqrt(w_k F_k))^2 / F_j.

#include "ojrs/mec_model.hpp"

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace ojrs {

struct Allocation {
  std::vector<double> freqs;   // cycles/s per UE, at its chosen venue
  std::vector<double> powers;  // W per UE
  double latency = 0.0;        // weighted sum, s
  double reward = 0.0;         // 1 / latency
};

inline double local_capacity(const UeSpec& ue) {
  double f = ue.f_local_max;
  // Compare in the power domain so an exactly binding compute cap is returned as is.
  if (ue.kappa > 0.0 && ue.kappa * std::pow(f, ue.v_exp) > ue.p_ue_max * (1.0 + 1e-12))
    f = std::pow(ue.p_ue_max / ue.kappa, 1.0 / ue.v_exp);
  if (!(f > 0.0)) throw std::domain_error("local capacity is not positive");
  return f;
}

inline std::vector<double> max_power_assignment(const OffloadDecision& d, const Scenario& s) {
  d.validate(s.num_ues(), s.num_mecs());
  std::vector<double> p(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& ue = s.ues[i];
    p[i] = d[i] > 0 ? ue.p_ue_max : ue.kappa * std::pow(local_capacity(ue), ue.v_exp);
  }
  return p;
}

inline std::vector<double> allocate_frequencies(const OffloadDecision& d, const Scenario& s) {
  const std::size_t n = s.num_ues();
  const std::size_t m = s.num_mecs();
  d.validate(n, m);
  std::vector<double> root_sum(m + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    if (d[i] > 0) root_sum[static_cast<std::size_t>(d[i])] += std::sqrt(s.ues[i].task.weight * s.ues[i].task.cycles);

  std::vector<double> f(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& ue = s.ues[i];
    if (d[i] == 0) {
      f[i] = local_capacity(ue);
      continue;
    }
    const auto j = static_cast<std::size_t>(d[i]);
    if (!(root_sum[j] > 0.0)) throw std::domain_error("degenerate server load");
    f[i] = s.mecs[j - 1].f_mec_max * std::sqrt(ue.task.weight * ue.task.cycles) / root_sum[j];
  }
  return f;
}

inline Allocation evaluate(const OffloadDecision& d, const Scenario& s, const ChannelState& channel) {
  Allocation a;
  a.powers = max_power_assignment(d, s);
  a.freqs = allocate_frequencies(d, s);
  a.latency = weighted_latency(s, d, a.freqs, a.powers, channel);
  if (!(a.latency > 0.0) || !std::isfinite(a.latency)) throw std::domain_error("infeasible allocation");
  a.reward = 1.0 / a.latency;
  return a;
}

// Per-channel cost tables for fast repeated evaluation of the optimal
// latency of many decisions (search inner loops). latency() equals
// evaluate(d, s, channel).latency up to rounding.
class PlacementCosts {
 public:
  PlacementCosts(const Scenario& s, const ChannelState& channel)
      : n_(s.num_ues()), m_(s.num_mecs()), tx_(n_ * m_), root_(n_), local_(n_), cap_(m_) {
    if (channel.n_ues != n_ || channel.n_mecs != m_) throw std::invalid_argument("channel shape mismatch");
    for (std::size_t i = 0; i < n_; ++i) {
      const auto& ue = s.ues[i];
      const double wf = ue.task.weight * ue.task.cycles;
      root_[i] = std::sqrt(wf);
      local_[i] = wf / local_capacity(ue);
      for (std::size_t j = 0; j < m_; ++j)
        tx_[i * m_ + j] = ue.task.weight * ue.task.data_bits / data_rate(ue.p_ue_max, channel.gain(i, j), s.radio);
    }
    for (std::size_t j = 0; j < m_; ++j) cap_[j] = s.mecs[j].f_mec_max;
  }

  std::size_t num_ues() const noexcept { return n_; }
  std::size_t num_mecs() const noexcept { return m_; }

  double latency(std::span<const int> assign) const {
    double total = 0.0;
    double sums[kStackMecs] = {};
    std::vector<double> heap;
    double* root_sum = sums;
    if (m_ > kStackMecs) {
      heap.assign(m_, 0.0);
      root_sum = heap.data();
    }
    for (std::size_t i = 0; i < n_; ++i) {
      const int a = assign[i];
      if (a == 0) {
        total += local_[i];
      } else {
        const auto j = static_cast<std::size_t>(a - 1);
        total += tx_[i * m_ + j];
        root_sum[j] += root_[i];
      }
    }
    for (std::size_t j = 0; j < m_; ++j) total += root_sum[j] * root_sum[j] / cap_[j];
    return total;
  }

  double latency(const OffloadDecision& d) const { return latency(std::span<const int>(d.assign)); }

 private:
  static constexpr std::size_t kStackMecs = 16;
  std::size_t n_, m_;
  std::vector<double> tx_;     // w_i D_i / r_ij at full power
  std::vector<double> root_;   // sqrt(w_i F_i)
  std::vector<double> local_;  // w_i F_i / f_local
  std::vector<double> cap_;
};

}  // namespace ojrs
