#include "ojrs/baselines.hpp"
#include "ojrs/config.hpp"
#include "ojrs/experiment.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace ojrs;

namespace {

ExperimentConfig small_experiment() {
  ExperimentConfig cfg = load_config(std::string(OJRS_SOURCE_DIR) + "/configs/desk.json");
  cfg.scenario.n_ues = 5;
  cfg.sae_dims = {8, 5};  // code width N keeps the single-server stack an identity
  cfg.sae.t_sae = 100;
  cfg.bench.pretrain_channels = 100;
  cfg.bench.eval_channels = 20;
  cfg.bench.timing_calls = 5;
  cfg.bench.pso.iterations = 60;
  cfg.bench.nrr_interval = 5;
  cfg.drl.hidden = {16, 12};
  cfg.drl.t_drl = 100;
  cfg.validate();
  return cfg;
}

std::string bench_csv(const BenchReport& r) {
  std::ostringstream out;
  write_bench_csv(out, r);
  return out.str();
}

}  // namespace

TEST(Greedy, SingleAmpleServerTakesEveryone) {
  const auto s = oracle::toy_scenario(10, 1, 1);
  const auto d = greedy_baseline(s, sample_channel_state(s, 0, 1));
  EXPECT_EQ(d.assign, std::vector<int>(10, 1));
}

TEST(Greedy, EquidistantUePicksLowerIndex) {
  auto s = oracle::toy_scenario(1, 2, 2);
  s.ues[0].position = {25.0, 25.0};
  EXPECT_EQ(greedy_baseline(s, sample_channel_state(s, 0, 1))[0], 1);
  s.ues[0].position = {39.0, 39.0};
  EXPECT_EQ(greedy_baseline(s, sample_channel_state(s, 0, 1))[0], 2);
}

TEST(Greedy, StarvedServerPushesHeaviestTasksLocal) {
  auto s = oracle::toy_scenario(4, 1, 3);
  s.mecs[0].f_mec_max = 2.5e9;  // equal share beats local (1e9) for at most two UEs
  s.ues[2].task.cycles = 3e9;
  const auto d = greedy_baseline(s, sample_channel_state(s, 0, 1));
  EXPECT_EQ(d[2], 0);
  std::size_t offloaded = 0;
  for (int a : d.assign) offloaded += a == 1;
  EXPECT_EQ(offloaded, 2u);
}

TEST(Baselines, AlwaysFeasible) {
  Rng rng{4};
  for (std::size_t m = 1; m <= 5; ++m) {
    auto s = oracle::toy_scenario(12, m, 10 + m);
    for (auto& mec : s.mecs) mec.f_mec_max = 4e9;
    for (std::uint64_t e = 0; e < 20; ++e) {
      const auto c = sample_channel_state(s, e, 5);
      EXPECT_NO_THROW(greedy_baseline(s, c).validate(12, m));
      EXPECT_NO_THROW(random_baseline(s, c, rng).validate(12, m));
      EXPECT_NO_THROW(asa_only(s, c, AsaConfig{}, 20, rng).validate(12, m));
      EXPECT_GT(evaluate(random_baseline(s, c, rng), s, c).reward, 0.0);
    }
  }
}

TEST(RandomBaseline, UniformOverPlacements) {
  const auto s = oracle::toy_scenario(10, 2, 6);
  const auto c = sample_channel_state(s, 0, 1);
  Rng rng{7};
  std::vector<std::size_t> counts(3, 0);
  for (int k = 0; k < 10000; ++k)
    for (int a : random_baseline(s, c, rng).assign) ++counts[static_cast<std::size_t>(a)];
  EXPECT_LT(oracle::chi_square(counts, {1.0 / 3, 1.0 / 3, 1.0 / 3}), oracle::chi_square_crit_01(2));
}

TEST(RandomBaseline, SeededDeterminism) {
  const auto s = oracle::toy_scenario(10, 3, 8);
  const auto c = sample_channel_state(s, 0, 1);
  Rng a{9}, b{9};
  for (int k = 0; k < 20; ++k) EXPECT_EQ(random_baseline(s, c, a), random_baseline(s, c, b));
}

TEST(AsaOnly, BeatsRandomOnPairedChannels) {
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto s = oracle::toy_scenario(10, 2, 20 + seed, 2e-7);
    const auto c = sample_channel_state(s, seed, 21);
    Rng rng{seed};
    const double ra = evaluate(asa_only(s, c, AsaConfig{}, 200, rng), s, c).reward;
    const double rr = evaluate(random_baseline(s, c, rng), s, c).reward;
    wins += ra >= rr;
  }
  EXPECT_GE(wins, 95);
}

TEST(Pso, MatchesExhaustiveOptimumOnToys) {
  struct Case {
    std::size_t n, m;
  };
  for (const auto [n, m] : {Case{6, 3}, Case{8, 2}}) {
    int found = 0;
    for (std::uint64_t run = 0; run < 100; ++run) {
      const auto s = oracle::toy_scenario(n, m, 1000 + run, 2e-7);
      const auto c = sample_channel_state(s, run, 31);
      const auto opt = oracle::enumerate_optimum(s, c);
      Rng rng{run};
      const double f = evaluate(pso_oracle(s, c, PsoConfig{}, rng), s, c).latency;
      found += f <= opt.objective * (1.0 + 1e-9);
    }
    EXPECT_GE(found, 95) << "N=" << n << " M=" << m;
  }
}

TEST(Pso, DominatesBaselines) {
  Rng rng{40};
  for (std::uint64_t e = 0; e < 20; ++e) {
    const auto s = oracle::toy_scenario(10, 2, 41 + e, 2e-7);
    const auto c = sample_channel_state(s, e, 42);
    const double best = evaluate(pso_oracle(s, c, PsoConfig{}, rng), s, c).reward;
    const double tol = 1.0 + 1e-9;
    EXPECT_LE(evaluate(greedy_baseline(s, c), s, c).reward, best * tol);
    EXPECT_LE(evaluate(random_baseline(s, c, rng), s, c).reward, best * tol);
    EXPECT_LE(evaluate(asa_only(s, c, AsaConfig{}, 200, rng), s, c).reward, best * tol);
  }
}

TEST(Pso, SeededDeterminism) {
  const auto s = oracle::toy_scenario(10, 3, 43);
  const auto c = sample_channel_state(s, 0, 1);
  Rng a{44}, b{44};
  EXPECT_EQ(pso_oracle(s, c, PsoConfig{}, a), pso_oracle(s, c, PsoConfig{}, b));
}

TEST(Nrr, Examples) {
  EXPECT_EQ(nrr(0.25, 0.25), 1.0);
  EXPECT_EQ(nrr(0.0, 0.25), 0.0);
  EXPECT_DOUBLE_EQ(nrr(0.2, 0.25), 0.8);
  EXPECT_EQ(nrr(2.0, 1.0, false), 1.0001);
  EXPECT_THROW(nrr(0.1, 0.0), std::invalid_argument);
}

TEST(Config, JsonRoundTripIsStable) {
  auto cfg = small_experiment();
  cfg.drl.weight_shift_epoch = 40;
  cfg.scenario.weights = {1.5};
  const auto text = to_json(cfg).dump();
  const auto back = config_from_json(nlohmann::json::parse(text));
  EXPECT_EQ(to_json(back).dump(), text);
  EXPECT_EQ(back.drl.weight_shift_epoch, std::optional<std::size_t>(40));
}

TEST(Config, ExplicitScenarioReproducesPlacement) {
  const auto cfg = small_experiment();
  const auto s = make_scenario(cfg.scenario, cfg.seed);
  const auto back = config_from_json(to_json(cfg, &s));
  const auto t = make_scenario(back.scenario, 999);
  ASSERT_EQ(t.num_ues(), s.num_ues());
  for (std::size_t i = 0; i < s.num_ues(); ++i) {
    EXPECT_EQ(t.ues[i].position.x, s.ues[i].position.x);
    EXPECT_EQ(t.ues[i].position.y, s.ues[i].position.y);
  }
  EXPECT_EQ(t.rng_seed, s.rng_seed);
}

TEST(Config, RejectsInvalidSections) {
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"asa":{"phi_cool":1.5}})")), std::invalid_argument);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"replay":{"rho_max":0.9}})")), std::invalid_argument);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"drl":{"search":"grid"}})")), std::invalid_argument);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"sae":{"dims":[]}})")), std::invalid_argument);
}

TEST(Report, RewardIsReciprocalOfLatency) {
  const auto cfg = small_experiment();
  const auto s = make_scenario(cfg.scenario, cfg.seed);
  auto trained = train_ojrs(cfg, s);
  const auto report = run_benchmark(cfg, trained.agent);
  ASSERT_EQ(report.rows.size(), 4u);
  for (const auto& row : report.rows) {
    EXPECT_NEAR(row.reward * row.mean_latency, 1.0, 1e-9) << row.strategy;
    EXPECT_LE(row.mean_nrr, 1.0001);
    EXPECT_GT(row.decision_time_s, 0.0);
    EXPECT_EQ(row.samples, cfg.bench.eval_channels);
  }
  for (const auto& log : trained.logs) EXPECT_NEAR(log.reward * log.latency, 1.0, 1e-9);
}

TEST(Report, IdenticalSeedsGiveIdenticalCsv) {
  const auto cfg = small_experiment();
  const auto s = make_scenario(cfg.scenario, cfg.seed);
  auto a = train_ojrs(cfg, s);
  auto b = train_ojrs(cfg, s);
  EXPECT_EQ(bench_csv(run_benchmark(cfg, a.agent, false)), bench_csv(run_benchmark(cfg, b.agent, false)));
  std::ostringstream ea, eb;
  write_epochs_csv(ea, a.logs);
  write_epochs_csv(eb, b.logs);
  EXPECT_EQ(ea.str(), eb.str());
}

TEST(Csv, HeaderAndFixedColumnOrder) {
  BenchReport r;
  r.rows.push_back({"OJRS", 0.5, 4.0, 0.25, 0.9, 3});
  EXPECT_EQ(bench_csv(r), "strategy,decision_time_s,mean_latency_s,reward,mean_nrr,samples\nOJRS,0.5,4,0.25,0.90000000000000002,3\n");
  std::ostringstream out;
  write_epochs_csv(out, {});
  EXPECT_EQ(out.str(),
            "epoch,reward,latency,loss,delta_loss,trained,t_sa,asa_best_objective,buffer_size,mean_priority,evictions,"
            "preserve_hits\n");
  EXPECT_THROW(r.at("Nope"), std::out_of_range);
}

TEST(Csv, DoublesRoundTripExactly) {
  for (double v : {0.1, 1.0 / 3.0, 2.5e-7, 12345.678901234567}) EXPECT_EQ(std::stod(csv_num(v)), v);
}

TEST(Dynamic, CompressionColumnAndIdentityRow) {
  auto cfg = small_experiment();
  cfg.scenario.n_ues = 30;
  cfg.sae_dims = {45, 30};
  cfg.sae.t_sae = 10;
  cfg.bench.pretrain_channels = 20;
  cfg.drl.t_drl = 0;
  const double expected[] = {0.0, 0.5, 0.67, 0.75, 0.80};
  for (std::size_t m = 1; m <= 5; ++m) {
    auto row = run_dynamic_one(cfg, m);
    EXPECT_EQ(std::round(row.compression_ratio * 100.0) / 100.0, expected[m - 1]) << m;
    if (m == 1) {
      EXPECT_EQ(row.sae_accuracy, 1.0);
    }
  }
}

TEST(Dynamic, SplitsNrrAtWeightShift) {
  auto cfg = small_experiment();
  cfg.bench.mec_counts = {1, 2};
  cfg.bench.jobs = 2;
  const auto rows = run_dynamic(cfg);
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& row : rows) {
    ASSERT_EQ(row.logs.size(), cfg.drl.t_drl);
    ASSERT_EQ(row.nrr_trace.size(), cfg.drl.t_drl / cfg.bench.nrr_interval);
    double f_best = 0.0, s_best = 0.0;
    for (const auto& [epoch, r] : row.nrr_trace) {
      EXPECT_GT(r, 0.0);
      EXPECT_LE(r, 1.0001);
      (epoch < cfg.drl.t_drl / 2 ? f_best : s_best) = std::max(epoch < cfg.drl.t_drl / 2 ? f_best : s_best, r);
    }
    EXPECT_EQ(row.f_best, f_best);
    EXPECT_EQ(row.s_best, s_best);
    EXPECT_LE(row.f_avg, row.f_best);
    EXPECT_LE(row.s_avg, row.s_best);
  }
  const auto again = run_dynamic_one(cfg, 2);
  EXPECT_EQ(again.f_avg, rows[1].f_avg);
  EXPECT_EQ(again.s_avg, rows[1].s_avg);
}
