#pragma once

// Numeric reference for allocate_frequencies: solves each server's
// sum-of-inverses program by projected gradient descent on the scaled simplex.
// Shares no algebra with the closed form; used to verify it.

#include "ojrs/allocator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace ojrs {

struct OracleOptions {
  double tol = 1e-10;        // stop when an iterate moves less than this (normalized units)
  std::size_t max_iters = 200000;
  double floor = 1e-9;       // lower bound on each normalized share
};

namespace detail {

// Euclidean projection of y onto {x : sum x = total, x_i >= lb}.
inline std::vector<double> project_capped_simplex(const std::vector<double>& y, double total, double lb) {
  const std::size_t n = y.size();
  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = y[i] - lb;
  const double mass = total - lb * static_cast<double>(n);
  std::vector<double> u = z;
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    cum += u[k];
    const double t = (cum - mass) / static_cast<double>(k + 1);
    if (u[k] - t > 0.0) theta = t;
  }
  for (std::size_t i = 0; i < n; ++i) z[i] = std::max(z[i] - theta, 0.0) + lb;
  return z;
}

inline double inverse_sum(const std::vector<double>& c, const std::vector<double>& x) {
  double v = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) v += c[i] / x[i];
  return v;
}

// min sum c_i / x_i  s.t. sum x_i = 1, x_i >= floor.
inline std::vector<double> solve_share_program(std::vector<double> c, const OracleOptions& opt) {
  const std::size_t n = c.size();
  if (n == 1) return {1.0};
  const double cmax = *std::max_element(c.begin(), c.end());
  if (!(cmax > 0.0)) throw std::domain_error("oracle: non-positive costs");
  for (auto& ci : c) ci /= cmax;

  std::vector<double> x(n, 1.0 / static_cast<double>(n));
  std::vector<double> grad(n);
  double value = inverse_sum(c, x);
  double step = 1e-3;
  for (std::size_t it = 0; it < opt.max_iters; ++it) {
    for (std::size_t i = 0; i < n; ++i) grad[i] = -c[i] / (x[i] * x[i]);
    std::vector<double> trial;
    double trial_value = 0.0;
    double moved = 0.0;
    // Armijo backtracking along the projection arc.
    for (;;) {
      std::vector<double> y(n);
      bool finite = true;
      for (std::size_t i = 0; i < n; ++i) {
        y[i] = x[i] - step * grad[i];
        finite &= std::isfinite(y[i]);
      }
      if (!finite) {
        step *= 0.5;
        continue;
      }
      trial = project_capped_simplex(y, 1.0, opt.floor);
      double decrease = 0.0;
      moved = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        decrease += grad[i] * (trial[i] - x[i]);
        moved = std::max(moved, std::abs(trial[i] - x[i]));
      }
      trial_value = inverse_sum(c, trial);
      if (trial_value <= value + 0.5 * decrease || moved < 1e-18 || step < 1e-300) break;
      step *= 0.5;
    }
    x = std::move(trial);
    value = trial_value;
    if (moved < opt.tol) return x;
    step = std::min(2.0 * step, 1e30);
  }
  throw std::runtime_error("oracle: projected gradient did not converge");
}

}  // namespace detail

inline std::vector<double> allocate_frequencies_oracle(const OffloadDecision& d, const Scenario& s,
                                                       const OracleOptions& opt = {}) {
  const std::size_t n = s.num_ues();
  const std::size_t m = s.num_mecs();
  d.validate(n, m);
  std::vector<double> f(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    if (d[i] == 0) f[i] = local_capacity(s.ues[i]);

  for (std::size_t j = 1; j <= m; ++j) {
    std::vector<std::size_t> members;
    std::vector<double> cost;
    for (std::size_t i = 0; i < n; ++i)
      if (static_cast<std::size_t>(d[i]) == j) {
        members.push_back(i);
        cost.push_back(s.ues[i].task.weight * s.ues[i].task.cycles);
      }
    if (members.empty()) continue;
    const auto share = detail::solve_share_program(cost, opt);
    for (std::size_t k = 0; k < members.size(); ++k) f[members[k]] = share[k] * s.mecs[j - 1].f_mec_max;
  }
  return f;
}

}  // namespace ojrs
