// Command-line front end: scenario generation, training, benchmarks and
// checkpoint inspection. All outputs land in --out.

#include "ojrs/experiment.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace ojrs;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool quiet = false;
};

ExperimentConfig resolve(const Globals& g, const std::string& kind) {
  ExperimentConfig cfg = g.config_path.empty() ? ExperimentConfig{} : load_config(g.config_path);
  cfg.kind = kind;
  if (g.seed) cfg.seed = *g.seed;
  if (g.out) cfg.out_dir = *g.out;
  cfg.validate();
  fs::create_directories(cfg.out_dir);
  return cfg;
}

std::string out_path(const ExperimentConfig& cfg, const std::string& name) { return (fs::path(cfg.out_dir) / name).string(); }

void write_text(const std::string& path, const std::string& text) {
  auto out = open_output(path);
  out << text;
}

void save_resolved(const ExperimentConfig& cfg, const Scenario& s) {
  write_text(out_path(cfg, "config.json"), to_json(cfg, &s).dump(2) + "\n");
}

Checkpoint policy_checkpoint(const OjrsAgent& agent, const ExperimentConfig& cfg, std::uint64_t epoch) {
  Checkpoint c;
  c.net = agent.policy();
  c.seed = cfg.seed;
  c.epoch = epoch;
  c.extra = {{"kind", "policy"}, {"n_ues", agent.n_ues()}, {"n_mecs", agent.n_mecs()}};
  return c;
}

void log_line(const Globals& g, const std::string& s) {
  if (!g.quiet) std::cout << s << '\n';
}

int cmd_gen_scenario(const Globals& g) {
  const auto cfg = resolve(g, "gen-scenario");
  const auto s = make_scenario(cfg.scenario, cfg.seed);
  save_resolved(cfg, s);
  log_line(g, "wrote " + out_path(cfg, "config.json") + " (" + std::to_string(s.num_ues()) + " UEs, " +
                  std::to_string(s.num_mecs()) + " MECs)");
  return 0;
}

int cmd_train_sae(const Globals& g) {
  const auto cfg = resolve(g, "sae-only");
  const auto s = make_scenario(cfg.scenario, cfg.seed);
  auto built = build_sae(cfg, s, cfg.seed);
  save_checkpoint(out_path(cfg, "sae.ckpt.json"), built.sae.checkpoint(cfg.seed, 0));
  {
    auto out = open_output(out_path(cfg, "sae_loss.csv"));
    CsvWriter w(out, {"iteration", "loss"});
    for (std::size_t k = 0; k < built.trace.loss_trace.size(); ++k) w.row(k, built.trace.loss_trace[k]);
  }
  save_resolved(cfg, s);
  log_line(g, "sae accuracy " + csv_num(built.accuracy) + ", compression ratio " + csv_num(built.sae.compression_ratio()));
  return 0;
}

int cmd_train(const Globals& g, std::optional<std::size_t> every) {
  auto cfg = resolve(g, "train");
  if (every) cfg.drl.checkpoint_every = *every;
  const auto s = make_scenario(cfg.scenario, cfg.seed);
  auto built = build_sae(cfg, s, cfg.seed);
  TrainOutcome r{make_agent(cfg, s, std::move(built.sae)), {}, built.accuracy};
  r.logs = r.agent.run(cfg.drl.t_drl, 0, [&](const EpochLog& log) {
    const auto n = cfg.drl.checkpoint_every;
    if (n == 0 || (log.epoch + 1) % n != 0 || log.epoch + 1 == cfg.drl.t_drl) return;
    save_checkpoint(out_path(cfg, "policy.e" + std::to_string(log.epoch + 1) + ".ckpt.json"),
                    policy_checkpoint(r.agent, cfg, log.epoch + 1));
  });
  {
    auto out = open_output(out_path(cfg, "epochs.csv"));
    write_epochs_csv(out, r.logs);
  }
  {
    auto out = open_output(out_path(cfg, "timing.csv"));
    write_timing_csv(out, r.logs);
  }
  save_checkpoint(out_path(cfg, "sae.ckpt.json"), r.agent.sae().checkpoint(cfg.seed, cfg.drl.t_drl));
  save_checkpoint(out_path(cfg, "policy.ckpt.json"), policy_checkpoint(r.agent, cfg, cfg.drl.t_drl));
  save_resolved(cfg, s);
  double tail = 0.0;
  const std::size_t k = std::min<std::size_t>(500, r.logs.size());
  for (std::size_t i = r.logs.size() - k; i < r.logs.size(); ++i) tail += r.logs[i].reward;
  log_line(g, "trained " + std::to_string(r.logs.size()) + " epochs; final mean reward " +
                  csv_num(k ? tail / static_cast<double>(k) : 0.0));
  return 0;
}

int cmd_bench(const Globals& g, const std::string& from) {
  const auto cfg = resolve(g, "bench");
  const auto s = make_scenario(cfg.scenario, cfg.seed);
  std::optional<OjrsAgent> agent;
  if (from.empty()) {
    agent.emplace(train_ojrs(cfg, s).agent);
  } else {
    const auto sae_path = (fs::path(from) / "sae.ckpt.json").string();
    const auto pol_path = (fs::path(from) / "policy.ckpt.json").string();
    if (!fs::exists(sae_path) || !fs::exists(pol_path)) throw std::runtime_error("missing checkpoints in " + from);
    auto sae = StackedAutoencoder::from_checkpoint(load_checkpoint(sae_path), cfg.sae);
    agent.emplace(make_agent(cfg, s, std::move(sae)));
    agent->load_policy(load_checkpoint(pol_path).net);
  }
  const auto report = run_benchmark(cfg, *agent);
  {
    auto out = open_output(out_path(cfg, "bench.csv"));
    write_bench_csv(out, report);
  }
  save_resolved(cfg, s);
  if (!g.quiet) print_bench_table(std::cout, report);
  return 0;
}

int cmd_dynamic(const Globals& g) {
  const auto cfg = resolve(g, "dynamic");
  const auto rows = run_dynamic(cfg);
  {
    auto out = open_output(out_path(cfg, "table3.csv"));
    write_table3_csv(out, rows);
  }
  for (const auto& r : rows) {
    auto out = open_output(out_path(cfg, "epochs_m" + std::to_string(r.n_mecs) + ".csv"));
    write_epochs_csv(out, r.logs);
    auto nrr_out = open_output(out_path(cfg, "nrr_m" + std::to_string(r.n_mecs) + ".csv"));
    CsvWriter w(nrr_out, {"epoch", "nrr"});
    for (const auto& [e, v] : r.nrr_trace) w.row(e, v);
  }
  if (!g.quiet) {
    char line[160];
    std::snprintf(line, sizeof line, "%-5s %9s %6s %8s %8s %8s %8s\n", "MECs", "Accuracy", "CR", "F-Best", "F-Avg",
                  "S-Best", "S-Avg");
    std::cout << line;
    for (const auto& r : rows) {
      std::snprintf(line, sizeof line, "%-5zu %9.4f %6.2f %8.4f %8.4f %8.4f %8.4f\n", r.n_mecs, r.sae_accuracy,
                    r.compression_ratio, r.f_best, r.f_avg, r.s_best, r.s_avg);
      std::cout << line;
    }
  }
  return 0;
}

int cmd_inspect(const std::string& path) {
  const auto c = load_checkpoint(path);
  std::cout << "seed " << c.seed << ", epoch " << c.epoch << ", parameters " << c.net.num_parameters() << '\n';
  for (std::size_t l = 0; l < c.net.num_layers(); ++l) {
    const auto& sp = c.net.specs()[l];
    std::cout << "  layer " << l << ": " << sp.in_dim << " -> " << sp.out_dim << " (" << to_string(sp.activation)
              << ")\n";
  }
  if (!c.extra.empty()) std::cout << "  " << c.extra.dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online joint offloading and resource scheduling for multi-server edge computing"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "master seed");
  app.add_option("--out", g.out, "output directory");
  app.add_flag("--quiet", g.quiet, "suppress console output");
  app.fallthrough();

  auto* gen = app.add_subcommand("gen-scenario", "sample a scenario and write it as an explicit config");
  auto* sae = app.add_subcommand("train-sae", "pretrain the channel autoencoder");
  auto* train = app.add_subcommand("train", "pretrain the autoencoder and train the policy online");
  std::optional<std::size_t> every;
  train->add_option("--checkpoint-every", every, "also write policy.e<epoch>.ckpt.json every n epochs");
  auto* bench = app.add_subcommand("bench", "compare OJRS with Greedy, Random and ASA-only");
  std::string from;
  bench->add_option("--from", from, "directory holding sae.ckpt.json and policy.ckpt.json from a train run");
  auto* dyn = app.add_subcommand("dynamic", "weight-shift study across server counts");
  auto* inspect = app.add_subcommand("inspect-checkpoint", "print a checkpoint summary");
  std::string ckpt;
  inspect->add_option("path", ckpt, "checkpoint file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*gen) return cmd_gen_scenario(g);
    if (*sae) return cmd_train_sae(g);
    if (*train) return cmd_train(g, every);
    if (*bench) return cmd_bench(g, from);
    if (*dyn) return cmd_dynamic(g);
    if (*inspect) return cmd_inspect(ckpt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
