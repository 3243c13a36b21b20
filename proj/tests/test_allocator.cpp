#include "ojrs/allocator.hpp"
#include "ojrs/allocator_oracle.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace ojrs;

namespace {

OffloadDecision random_decision(std::size_t n, std::size_t m, Rng& rng) {
  OffloadDecision d;
  for (std::size_t i = 0; i < n; ++i) d.assign.push_back(static_cast<int>(uniform_index(rng, m + 1)));
  return d;
}

Scenario random_tasks(std::size_t n, std::size_t m, Rng& rng) {
  auto s = oracle::toy_scenario(n, m, rng());
  std::uniform_real_distribution<double> cyc(2e8, 3e9), w(0.3, 3.0);
  for (auto& u : s.ues) {
    u.task.cycles = cyc(rng);
    u.task.weight = w(rng);
  }
  return s;
}

double compute_cost(const OffloadDecision& d, const Scenario& s, const std::vector<double>& f) {
  double v = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d[i] > 0) v += s.ues[i].task.weight * s.ues[i].task.cycles / f[i];
  return v;
}

}  // namespace

TEST(LocalCapacity, ComputeCapBindsExactly) {
  UeSpec u;
  EXPECT_DOUBLE_EQ(local_capacity(u), 1e9);
}

TEST(LocalCapacity, PowerCapBinds) {
  UeSpec u;
  u.p_ue_max = 1e-3;
  u.f_local_max = 1e10;
  const double f = local_capacity(u);
  EXPECT_NEAR(f, 1e8, 1e-6 * 1e8);
  EXPECT_NEAR(u.kappa * f * f * f, 1e-3, 1e-12);
}

TEST(LocalCapacity, FrequencyCapBindsWithAmplePower) {
  UeSpec u;
  u.f_local_max = 0.5e9;
  EXPECT_DOUBLE_EQ(local_capacity(u), 0.5e9);
}

TEST(LocalCapacity, NonPositiveResultRejected) {
  UeSpec u;
  u.f_local_max = 0.0;
  EXPECT_THROW(local_capacity(u), std::domain_error);
}

TEST(Power, OffloadedAtMaximumLocalAtCubicLaw) {
  auto s = oracle::toy_scenario(2, 1, 1);
  const auto p = max_power_assignment(OffloadDecision{{1, 0}}, s);
  EXPECT_EQ(p[0], 1.0);
  EXPECT_NEAR(p[1], 1.0, 1e-12);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_LE(p[i], s.ues[i].p_ue_max * (1 + 1e-12));
}

TEST(Frequencies, EqualTasksSplitEvenly) {
  auto s = oracle::toy_scenario(2, 1, 1);
  const auto f = allocate_frequencies(OffloadDecision{{1, 1}}, s);
  EXPECT_DOUBLE_EQ(f[0], 2.5e10);
  EXPECT_DOUBLE_EQ(f[1], 2.5e10);
}

TEST(Frequencies, SquareRootSplit) {
  auto s = oracle::toy_scenario(2, 1, 1);
  s.mecs[0].f_mec_max = 3e9;
  s.ues[0].task.cycles = 1e9;  // w F = 1e18
  s.ues[1].task.cycles = 4e9;  // w F = 4e18
  const OffloadDecision d{{1, 1}};
  const auto f = allocate_frequencies(d, s);
  EXPECT_NEAR(f[0], 1e9, 1e-3);
  EXPECT_NEAR(f[1], 2e9, 1e-3);
  const auto g = allocate_frequencies_oracle(d, s);
  EXPECT_NEAR(g[0], 1e9, 1e-6 * 1e9);
  EXPECT_NEAR(g[1], 2e9, 1e-6 * 2e9);
}

TEST(Frequencies, SingleUeGetsWholeServer) {
  auto s = oracle::toy_scenario(3, 2, 1);
  const auto f = allocate_frequencies(OffloadDecision{{2, 0, 0}}, s);
  EXPECT_EQ(f[0], 5e10);
  EXPECT_EQ(f[1], 1e9);
}

TEST(Oracle, SymmetricCaseSplitsEqually) {
  auto s = oracle::toy_scenario(4, 1, 2);
  const auto g = allocate_frequencies_oracle(OffloadDecision{{1, 1, 1, 1}}, s);
  for (double v : g) EXPECT_NEAR(v, 1.25e10, 1e-6 * 1.25e10);
}

TEST(Oracle, AgreesWithClosedFormOnRandomInstances) {
  Rng rng{2024};
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 30), m = 1 + uniform_index(rng, 5);
    const auto s = random_tasks(n, m, rng);
    const auto d = random_decision(n, m, rng);
    const auto f = allocate_frequencies(d, s);
    const auto g = allocate_frequencies_oracle(d, s);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(g[i], f[i], 1e-6 * f[i]) << "trial " << trial << " UE " << i;
  }
}

TEST(Oracle, NoRandomFeasiblePointBeatsIt) {
  Rng rng{77};
  auto s = random_tasks(6, 1, rng);
  const OffloadDecision d{{1, 1, 1, 1, 1, 1}};
  const double best = compute_cost(d, s, allocate_frequencies_oracle(d, s));
  std::exponential_distribution<double> e(1.0);
  for (int k = 0; k < 1000; ++k) {
    std::vector<double> x(6);
    double sum = 0.0;
    for (auto& v : x) sum += v = e(rng);
    std::vector<double> f(6);
    for (std::size_t i = 0; i < 6; ++i) f[i] = x[i] / sum * s.mecs[0].f_mec_max;
    EXPECT_GE(compute_cost(d, s, f), best * (1 - 1e-12));
  }
}

TEST(Oracle, CappedSimplexProjectionIsFeasible) {
  const auto z = detail::project_capped_simplex({0.9, -3.0, 0.4, 2.0}, 1.0, 0.01);
  double sum = 0.0;
  for (double v : z) {
    EXPECT_GE(v, 0.01 - 1e-15);
    sum += v;
  }
  EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(Allocation, ConstraintsHoldAndServerBudgetIsTight) {
  Rng rng{5};
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 30), m = 1 + uniform_index(rng, 5);
    const auto s = random_tasks(n, m, rng);
    const auto d = random_decision(n, m, rng);
    const auto c = sample_channel_state(s, 0, rng());
    const auto a = evaluate(d, s, c);
    std::vector<double> used(m + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& u = s.ues[i];
      EXPECT_LE(a.powers[i], u.p_ue_max * (1 + 1e-12));  // C4
      if (d[i] == 0) {
        EXPECT_LE(a.freqs[i], u.f_local_max * (1 + 1e-12));  // C3
        EXPECT_LE(u.kappa * std::pow(a.freqs[i], u.v_exp), u.p_ue_max * (1 + 1e-12));
      }
      used[static_cast<std::size_t>(d[i])] += a.freqs[i];
    }
    for (std::size_t j = 1; j <= m; ++j) {
      bool serving = false;
      for (int v : d.assign) serving |= v == static_cast<int>(j);
      if (serving) {
        EXPECT_NEAR(used[j], s.mecs[j - 1].f_mec_max, 1e-9 * s.mecs[j - 1].f_mec_max);  // C5 tight
      }
    }
    EXPECT_GT(a.latency, 0.0);
    EXPECT_NEAR(a.reward * a.latency, 1.0, 1e-15);
  }
}

TEST(Allocation, BudgetPreservingPerturbationNeverHelps) {
  Rng rng{6};
  auto s = random_tasks(5, 1, rng);
  const OffloadDecision d{{1, 1, 1, 1, 1}};
  const auto f = allocate_frequencies(d, s);
  const double base = compute_cost(d, s, f);
  for (std::size_t a = 0; a < 5; ++a)
    for (std::size_t b = 0; b < 5; ++b) {
      if (a == b) continue;
      auto g = f;
      const double shift = 0.01 * g[a];
      g[a] += shift;
      g[b] -= shift;
      EXPECT_GE(compute_cost(d, s, g), base);
    }
}

TEST(Allocation, TableRewardsAreReciprocalLatencies) {
  // The published reward column is the reciprocal of the latency column up to
  // its four printed decimals; the same identity defines Allocation::reward.
  EXPECT_NEAR(1.0 / 20.6874, 0.0483, 1e-4);
  EXPECT_NEAR(1.0 / 36.4325, 0.0275, 1e-4);
}

TEST(Allocation, AllLocalLatency) {
  auto s = oracle::toy_scenario(4, 2, 3);
  const auto c = sample_channel_state(s, 0, 3);
  const auto a = evaluate(OffloadDecision{{0, 0, 0, 0}}, s, c);
  EXPECT_NEAR(a.latency, 4.0 * 1e9 / 1e9, 1e-12);
}

TEST(PlacementCostsTable, MatchesEvaluate) {
  Rng rng{8};
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 20), m = 1 + uniform_index(rng, 5);
    const auto s = random_tasks(n, m, rng);
    const auto c = sample_channel_state(s, 0, rng());
    const PlacementCosts pc(s, c);
    const auto d = random_decision(n, m, rng);
    const double ref = evaluate(d, s, c).latency;
    EXPECT_NEAR(pc.latency(d), ref, 1e-12 * ref);
  }
}
