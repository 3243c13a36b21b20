#pragma once

// Experiment drivers behind the command line: autoencoder pretraining,
// policy training, the strategy benchmark and the dynamic-environment study,
// plus their CSV outputs.

#include "ojrs/allocator.hpp"
#include "ojrs/baselines.hpp"
#include "ojrs/config.hpp"
#include "ojrs/drl.hpp"
#include "ojrs/sae2r.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

namespace ojrs {

// ---------------------------------------------------------------------------
// CSV helpers

inline std::string csv_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_num(std::uint64_t v) { return std::to_string(v); }

class CsvWriter {
 public:
  CsvWriter(std::ostream& out, const std::vector<std::string>& header) : out_(out) { row_strings(header); }

  template <typename... Cols>
  void row(const Cols&... cols) {
    std::vector<std::string> cells{cell(cols)...};
    row_strings(cells);
  }

 private:
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(double v) { return csv_num(v); }
  static std::string cell(bool v) { return v ? "1" : "0"; }
  template <typename T>
    requires std::is_integral_v<T>
  static std::string cell(T v) {
    return std::to_string(v);
  }

  void row_strings(const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) out_ << (k ? "," : "") << cells[k];
    out_ << '\n';
  }
  std::ostream& out_;
};

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

// Deterministic per-epoch record. Wall-clock columns go to write_timing_csv.
inline void write_epochs_csv(std::ostream& out, const std::vector<EpochLog>& logs) {
  CsvWriter w(out, {"epoch", "reward", "latency", "loss", "delta_loss", "trained", "t_sa", "asa_best_objective",
                    "buffer_size", "mean_priority", "evictions", "preserve_hits"});
  for (const auto& l : logs)
    w.row(l.epoch, l.reward, l.latency, l.loss, l.delta_loss, l.trained, l.t_sa, l.asa_best_objective, l.replay.size,
          l.replay.mean_priority, l.replay.evictions, l.replay.preserve_hits);
}

inline void write_timing_csv(std::ostream& out, const std::vector<EpochLog>& logs) {
  CsvWriter w(out, {"epoch", "decision_ms", "asa_ms"});
  for (const auto& l : logs) w.row(l.epoch, l.decision_ms, l.asa_ms);
}

// ---------------------------------------------------------------------------
// Building blocks

inline std::vector<ChannelState> draw_channels(const Scenario& s, std::size_t count, std::uint64_t seed,
                                               std::uint64_t first_epoch = 0) {
  std::vector<ChannelState> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) out.push_back(sample_channel_state(s, first_epoch + k, seed));
  return out;
}

struct SaeBuild {
  StackedAutoencoder sae;
  SaeTrainResult trace;
  double accuracy = 1.0;  // on held-out channels
};

inline SaeBuild build_sae(const ExperimentConfig& cfg, const Scenario& s, std::uint64_t seed) {
  const auto pretrain_seed = derive_seed(seed, static_cast<std::uint64_t>(Stream::pretrain));
  auto rng = make_rng(seed, Stream::sae);
  SaeBuild b;
  b.sae = StackedAutoencoder(cfg.sae_for(s.num_ues(), s.num_mecs()), s.num_ues(), s.num_mecs(), rng);
  const std::size_t count = std::max<std::size_t>(cfg.bench.pretrain_channels, 1);
  b.trace = b.sae.pretrain(draw_channels(s, count, pretrain_seed), rng);
  std::vector<std::vector<double>> test;
  for (const auto& c : draw_channels(s, std::max<std::size_t>(count / 5, 1), pretrain_seed, count))
    test.push_back(b.sae.rasterize(c));
  b.accuracy = b.sae.accuracy(test);
  return b;
}

inline OjrsAgent make_agent(const ExperimentConfig& cfg, const Scenario& s, StackedAutoencoder sae) {
  return OjrsAgent(s, std::move(sae), cfg.drl, cfg.asa, cfg.replay, cfg.seed);
}

struct TrainOutcome {
  OjrsAgent agent;
  std::vector<EpochLog> logs;
  double sae_accuracy = 1.0;
};

inline TrainOutcome train_ojrs(const ExperimentConfig& cfg, const Scenario& s) {
  auto built = build_sae(cfg, s, cfg.seed);
  TrainOutcome out{make_agent(cfg, s, std::move(built.sae)), {}, built.accuracy};
  out.logs = out.agent.run(cfg.drl.t_drl);
  return out;
}

// ---------------------------------------------------------------------------
// Strategy benchmark

struct StrategyRow {
  std::string strategy;
  double decision_time_s = 0.0;  // median per decision, including its allocation solve
  double mean_latency = 0.0;
  double reward = 0.0;           // 1 / mean_latency
  double mean_nrr = 0.0;
  std::size_t samples = 0;
};

struct BenchReport {
  std::vector<StrategyRow> rows;
  const StrategyRow& at(const std::string& name) const {
    for (const auto& r : rows)
      if (r.strategy == name) return r;
    throw std::out_of_range("no strategy " + name);
  }
};

namespace detail {
template <typename F>
double median_seconds(std::size_t calls, F&& f) {
  std::vector<double> t(std::max<std::size_t>(calls, 1));
  for (std::size_t k = 0; k < t.size(); ++k) {
    const auto a = std::chrono::steady_clock::now();
    f(k);
    const auto b = std::chrono::steady_clock::now();
    t[k] = std::chrono::duration<double>(b - a).count();
  }
  std::nth_element(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(t.size() / 2), t.end());
  return t[t.size() / 2];
}
}  // namespace detail

// Evaluates the trained agent and the baselines on a common set of channel
// draws taken after the training horizon.
inline BenchReport run_benchmark(const ExperimentConfig& cfg, const OjrsAgent& agent, bool with_timing = true) {
  const Scenario& s = agent.scenario();
  const auto eval_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(Stream::evaluation));
  const auto channels = draw_channels(s, std::max<std::size_t>(cfg.bench.eval_channels, 1), eval_seed);

  auto base_rng = make_rng(cfg.seed, Stream::baseline);
  auto asa_rng = make_rng(cfg.seed, Stream::asa);
  auto oracle_rng = make_rng(cfg.seed, Stream::oracle);

  struct Named {
    std::string name;
    std::function<OffloadDecision(const ChannelState&)> decide;
  };
  std::vector<Named> strategies{
      {"OJRS", [&](const ChannelState& c) { return agent.decide(c); }},
      {"Greedy", [&](const ChannelState& c) { return greedy_baseline(s, c); }},
      {"Random", [&](const ChannelState& c) { return random_baseline(s, c, base_rng); }},
      {"ASA", [&](const ChannelState& c) { return asa_only(s, c, cfg.asa, cfg.bench.asa_only_budget, asa_rng); }},
  };

  std::vector<double> oracle_reward(channels.size());
  for (std::size_t k = 0; k < channels.size(); ++k)
    oracle_reward[k] = evaluate(pso_oracle(s, channels[k], cfg.bench.pso, oracle_rng), s, channels[k]).reward;

  BenchReport report;
  for (auto& st : strategies) {
    StrategyRow row;
    row.strategy = st.name;
    double latency_sum = 0.0, nrr_sum = 0.0;
    for (std::size_t k = 0; k < channels.size(); ++k) {
      const auto a = evaluate(st.decide(channels[k]), s, channels[k]);
      latency_sum += a.latency;
      nrr_sum += nrr(a.reward, oracle_reward[k], false);
    }
    row.samples = channels.size();
    row.mean_latency = latency_sum / static_cast<double>(channels.size());
    row.reward = 1.0 / row.mean_latency;
    row.mean_nrr = nrr_sum / static_cast<double>(channels.size());
    if (with_timing)
      row.decision_time_s = detail::median_seconds(cfg.bench.timing_calls, [&](std::size_t k) {
        const auto& c = channels[k % channels.size()];
        volatile double sink = evaluate(st.decide(c), s, c).latency;
        (void)sink;
      });
    report.rows.push_back(row);
  }
  return report;
}

inline void write_bench_csv(std::ostream& out, const BenchReport& r) {
  CsvWriter w(out, {"strategy", "decision_time_s", "mean_latency_s", "reward", "mean_nrr", "samples"});
  for (const auto& row : r.rows) w.row(row.strategy, row.decision_time_s, row.mean_latency, row.reward, row.mean_nrr, row.samples);
}

inline void print_bench_table(std::ostream& out, const BenchReport& r) {
  char line[160];
  std::snprintf(line, sizeof line, "%-10s %16s %16s %10s %10s\n", "Strategy", "Time/decision(s)", "Latency(s)", "Reward",
                "NRR");
  out << line;
  for (const auto& row : r.rows) {
    std::snprintf(line, sizeof line, "%-10s %16.6g %16.4f %10.4f %10.4f\n", row.strategy.c_str(), row.decision_time_s,
                  row.mean_latency, row.reward, row.mean_nrr);
    out << line;
  }
}

// ---------------------------------------------------------------------------
// Dynamic environment: weights re-drawn mid-run, across server counts

struct DynamicRow {
  std::size_t n_mecs = 0;
  double sae_accuracy = 0.0;
  double compression_ratio = 0.0;
  double f_best = 0.0, f_avg = 0.0;  // before the weight shift
  double s_best = 0.0, s_avg = 0.0;  // after
  std::vector<EpochLog> logs;
  std::vector<std::pair<std::uint64_t, double>> nrr_trace;
};

inline DynamicRow run_dynamic_one(ExperimentConfig cfg, std::size_t n_mecs) {
  cfg.scenario.n_mecs = n_mecs;
  cfg.scenario.mec_positions.clear();
  if (!cfg.drl.weight_shift_epoch) cfg.drl.weight_shift_epoch = cfg.drl.t_drl / 2;
  const Scenario s = make_scenario(cfg.scenario, cfg.seed);
  auto built = build_sae(cfg, s, cfg.seed);
  DynamicRow row;
  row.n_mecs = n_mecs;
  row.sae_accuracy = built.accuracy;
  row.compression_ratio = built.sae.compression_ratio();
  auto agent = make_agent(cfg, s, std::move(built.sae));
  auto oracle_rng = make_rng(cfg.seed, Stream::oracle);
  const std::uint64_t shift = *cfg.drl.weight_shift_epoch;
  const std::size_t every = std::max<std::size_t>(cfg.bench.nrr_interval, 1);
  double f_sum = 0.0, s_sum = 0.0;
  std::size_t f_n = 0, s_n = 0;
  row.logs = agent.run(cfg.drl.t_drl, 0, [&](const EpochLog& log) {
    if (log.epoch % every != 0) return;
    const auto channel = agent.channel_at(log.epoch);
    const auto best = evaluate(pso_oracle(agent.scenario(), channel, cfg.bench.pso, oracle_rng), agent.scenario(), channel);
    const double r = nrr(log.reward, best.reward, false);
    row.nrr_trace.emplace_back(log.epoch, r);
    if (log.epoch < shift) {
      row.f_best = std::max(row.f_best, r);
      f_sum += r;
      ++f_n;
    } else {
      row.s_best = std::max(row.s_best, r);
      s_sum += r;
      ++s_n;
    }
  });
  row.f_avg = f_n ? f_sum / static_cast<double>(f_n) : 0.0;
  row.s_avg = s_n ? s_sum / static_cast<double>(s_n) : 0.0;
  return row;
}

// Server counts run on a worker pool; each worker owns its whole stack.
inline std::vector<DynamicRow> run_dynamic(const ExperimentConfig& cfg) {
  const auto& counts = cfg.bench.mec_counts;
  std::vector<DynamicRow> rows(counts.size());
  std::size_t jobs = cfg.bench.jobs ? cfg.bench.jobs : std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, std::max<std::size_t>(counts.size(), 1));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t k; (k = next++) < counts.size();) {
      try {
        rows[k] = run_dynamic_one(cfg, counts[k]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return rows;
}

inline void write_table3_csv(std::ostream& out, const std::vector<DynamicRow>& rows) {
  CsvWriter w(out, {"n_mecs", "sae_accuracy", "compression_ratio", "f_best", "f_avg", "s_best", "s_avg"});
  for (const auto& r : rows) w.row(r.n_mecs, r.sae_accuracy, r.compression_ratio, r.f_best, r.f_avg, r.s_best, r.s_avg);
}

}  // namespace ojrs
