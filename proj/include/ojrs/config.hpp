#pragma once

// Experiment configuration: JSON document with sections scenario, sae, drl,
// asa, replay and bench. Every key is optional and falls back to the
// defaults below. A scenario section may carry an explicit "ues" list (as
// written by gen-scenario); otherwise UE positions are drawn uniformly in
// the area from the scenario seed.

#include "ojrs/asa.hpp"
#include "ojrs/baselines.hpp"
#include "ojrs/drl.hpp"
#include "ojrs/mec_model.hpp"
#include "ojrs/random.hpp"
#include "ojrs/replay2p.hpp"
#include "ojrs/sae2r.hpp"

#include <json.hpp>

#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ojrs {

struct ScenarioConfig {
  std::size_t n_ues = 30;
  std::size_t n_mecs = 2;
  double area_m = 50.0;
  std::vector<Point> mec_positions;  // empty: standard layout for n_mecs
  double bandwidth_hz = 1e6;
  double noise_w = 1e-10;
  double beta0 = 1e-3;
  double min_distance_m = 1.0;
  double p_ue_max_w = 1.0;
  double f_local_max = 1e9;
  double f_mec_max = 5e10;
  double kappa = 1e-27;
  double v_exp = 3.0;
  Task task;
  std::vector<double> weights;  // empty: every task weight = task.weight
  FadingMode fading = FadingMode::rayleigh;
  std::optional<std::uint64_t> seed;  // placement seed; default derived from the master seed
  std::vector<UeSpec> ues;            // explicit UEs override sampling
};

struct BenchConfig {
  std::size_t pretrain_channels = 2000;  // offline autoencoder data
  std::size_t eval_channels = 200;       // channel draws per benchmark
  std::size_t timing_calls = 200;        // decision calls timed per strategy
  std::size_t asa_only_budget = 200;
  PsoConfig pso;
  std::size_t nrr_interval = 10;         // oracle evaluated every k epochs
  std::vector<std::size_t> mec_counts{1, 2, 3, 4, 5};
  std::size_t jobs = 0;                  // 0: hardware concurrency
};

struct ExperimentConfig {
  std::string kind = "train";
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  ScenarioConfig scenario;
  std::vector<std::size_t> sae_dims{45, 30};  // widths after the N*M input
  SaeConfig sae;
  DrlConfig drl;
  AsaConfig asa;
  ReplayConfig replay;
  BenchConfig bench;

  void validate() const {
    if (scenario.n_ues == 0 || scenario.n_mecs == 0) throw std::invalid_argument("config: need UEs and MECs");
    if (sae_dims.empty()) throw std::invalid_argument("config: sae.dims must not be empty");
    sae_for(scenario.n_ues, scenario.n_mecs).validate();
    drl.validate();
    asa.validate();
    replay.validate();
  }

  SaeConfig sae_for(std::size_t n_ues, std::size_t n_mecs) const {
    SaeConfig c = sae;
    c.encoder_dims = {n_ues * n_mecs};
    c.encoder_dims.insert(c.encoder_dims.end(), sae_dims.begin(), sae_dims.end());
    return c;
  }
};

inline Scenario make_scenario(const ScenarioConfig& c, std::uint64_t master_seed) {
  Scenario s;
  s.area = c.area_m;
  s.radio = {c.bandwidth_hz, c.noise_w, c.beta0, c.min_distance_m};
  s.fading = c.fading;
  s.rng_seed = c.seed.value_or(derive_seed(master_seed, static_cast<std::uint64_t>(Stream::scenario)));
  const auto layout = c.mec_positions.empty() ? standard_mec_layout(c.n_mecs) : c.mec_positions;
  if (layout.size() != c.n_mecs) throw std::invalid_argument("config: mec_positions length differs from n_mecs");
  for (const auto& p : layout) s.mecs.push_back({p, c.f_mec_max});
  if (!c.ues.empty()) {
    s.ues = c.ues;
  } else {
    Rng rng{s.rng_seed};
    std::uniform_real_distribution<double> coord(0.0, c.area_m);
    for (std::size_t i = 0; i < c.n_ues; ++i) {
      UeSpec u;
      u.position.x = coord(rng);
      u.position.y = coord(rng);
      u.task = c.task;
      if (!c.weights.empty()) {
        if (c.weights.size() != 1 && c.weights.size() != c.n_ues)
          throw std::invalid_argument("config: weights must have 1 or n_ues entries");
        u.task.weight = c.weights.size() == 1 ? c.weights[0] : c.weights[i];
      }
      u.f_local_max = c.f_local_max;
      u.p_ue_max = c.p_ue_max_w;
      u.kappa = c.kappa;
      u.v_exp = c.v_exp;
      s.ues.push_back(u);
    }
  }
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------
// JSON mapping

namespace detail {

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline nlohmann::json point_json(const Point& p) { return nlohmann::json::array({p.x, p.y}); }
inline Point point_from(const nlohmann::json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

inline nlohmann::json ue_json(const UeSpec& u) {
  return {{"position", point_json(u.position)},
          {"cycles", u.task.cycles},
          {"data_bits", u.task.data_bits},
          {"weight", u.task.weight},
          {"f_local_max", u.f_local_max},
          {"p_ue_max_w", u.p_ue_max},
          {"kappa", u.kappa},
          {"v_exp", u.v_exp}};
}

inline UeSpec ue_from(const nlohmann::json& j) {
  UeSpec u;
  u.position = point_from(j.at("position"));
  read(j, "cycles", u.task.cycles);
  read(j, "data_bits", u.task.data_bits);
  read(j, "weight", u.task.weight);
  read(j, "f_local_max", u.f_local_max);
  read(j, "p_ue_max_w", u.p_ue_max);
  read(j, "kappa", u.kappa);
  read(j, "v_exp", u.v_exp);
  return u;
}

}  // namespace detail

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  using detail::read;
  ExperimentConfig c;
  read(j, "kind", c.kind);
  read(j, "seed", c.seed);
  read(j, "out", c.out_dir);

  if (j.contains("scenario")) {
    const auto& s = j.at("scenario");
    auto& sc = c.scenario;
    read(s, "n_ues", sc.n_ues);
    read(s, "n_mecs", sc.n_mecs);
    read(s, "area_m", sc.area_m);
    if (s.contains("mec_positions"))
      for (const auto& p : s.at("mec_positions")) sc.mec_positions.push_back(detail::point_from(p));
    read(s, "bandwidth_hz", sc.bandwidth_hz);
    read(s, "noise_w", sc.noise_w);
    read(s, "beta0", sc.beta0);
    read(s, "min_distance_m", sc.min_distance_m);
    read(s, "p_ue_max_w", sc.p_ue_max_w);
    read(s, "f_local_max", sc.f_local_max);
    read(s, "f_mec_max", sc.f_mec_max);
    read(s, "kappa", sc.kappa);
    read(s, "v_exp", sc.v_exp);
    if (s.contains("task")) {
      read(s.at("task"), "data_bits", sc.task.data_bits);
      read(s.at("task"), "cycles", sc.task.cycles);
    }
    if (s.contains("weights")) {
      const auto& w = s.at("weights");
      sc.weights = w.is_array() ? w.get<std::vector<double>>() : std::vector<double>{w.get<double>()};
    }
    if (s.contains("fading")) sc.fading = fading_mode_from_string(s.at("fading").get<std::string>());
    if (s.contains("seed")) sc.seed = s.at("seed").get<std::uint64_t>();
    if (s.contains("ues"))
      for (const auto& u : s.at("ues")) sc.ues.push_back(detail::ue_from(u));
    if (!sc.ues.empty()) sc.n_ues = sc.ues.size();
  }
  if (j.contains("sae")) {
    const auto& s = j.at("sae");
    read(s, "dims", c.sae_dims);
    read(s, "gamma1", c.sae.gamma1);
    read(s, "gamma2", c.sae.gamma2);
    read(s, "t_sae", c.sae.t_sae);
    read(s, "memory", c.sae.memory_capacity);
    read(s, "threshold", c.sae.error_threshold);
    read(s, "sync_period", c.sae.sync_period);
    read(s, "retrain_iters", c.sae.retrain_iters);
    read(s, "batch", c.sae.batch_size);
    read(s, "learning_rate", c.sae.learning_rate);
    read(s, "adam", c.sae.use_adam);
  }
  if (j.contains("drl")) {
    const auto& s = j.at("drl");
    read(s, "dims", c.drl.hidden);
    read(s, "lambda", c.drl.lambda);
    read(s, "t_drl", c.drl.t_drl);
    read(s, "phi", c.drl.phi);
    read(s, "batch", c.drl.batch);
    read(s, "learning_rate", c.drl.learning_rate);
    read(s, "updates_per_train", c.drl.updates_per_train);
    if (s.contains("weight_shift_epoch") && !s.at("weight_shift_epoch").is_null())
      c.drl.weight_shift_epoch = s.at("weight_shift_epoch").get<std::size_t>();
    read(s, "weight_shift_low", c.drl.weight_shift_low);
    read(s, "weight_shift_high", c.drl.weight_shift_high);
    read(s, "exploration", c.drl.exploration);
    read(s, "checkpoint_every", c.drl.checkpoint_every);
    if (s.contains("search")) {
      const auto k = s.at("search").get<std::string>();
      if (k != "asa" && k != "random") throw std::invalid_argument("config: drl.search must be asa or random");
      c.drl.search = k == "asa" ? SearchKind::asa : SearchKind::random;
    }
  }
  if (j.contains("asa")) {
    const auto& s = j.at("asa");
    read(s, "t0", c.asa.t0);
    read(s, "phi_cool", c.asa.cooling);
    read(s, "t_sa", c.asa.t_sa_init);
    read(s, "epsilon", c.asa.epsilon);
    read(s, "t_sa_max", c.asa.t_sa_max);
  }
  if (j.contains("replay")) {
    const auto& s = j.at("replay");
    read(s, "capacity", c.replay.capacity);
    read(s, "rho_max", c.replay.rho_max);
    read(s, "tau", c.replay.tau);
    read(s, "eps", c.replay.eps);
    read(s, "preserve", c.replay.preserve);
  }
  if (j.contains("bench")) {
    const auto& s = j.at("bench");
    read(s, "pretrain_channels", c.bench.pretrain_channels);
    read(s, "eval_channels", c.bench.eval_channels);
    read(s, "timing_calls", c.bench.timing_calls);
    read(s, "asa_only_budget", c.bench.asa_only_budget);
    read(s, "nrr_interval", c.bench.nrr_interval);
    read(s, "mec_counts", c.bench.mec_counts);
    read(s, "jobs", c.bench.jobs);
    if (s.contains("pso")) {
      const auto& p = s.at("pso");
      read(p, "particles", c.bench.pso.particles);
      read(p, "iterations", c.bench.pso.iterations);
      read(p, "inertia", c.bench.pso.inertia);
      read(p, "cognitive", c.bench.pso.cognitive);
      read(p, "social", c.bench.pso.social);
    }
  }
  c.validate();
  return c;
}

inline nlohmann::json to_json(const ExperimentConfig& c, const Scenario* explicit_scenario = nullptr) {
  nlohmann::json scen = {{"n_ues", c.scenario.n_ues},
                         {"n_mecs", c.scenario.n_mecs},
                         {"area_m", c.scenario.area_m},
                         {"bandwidth_hz", c.scenario.bandwidth_hz},
                         {"noise_w", c.scenario.noise_w},
                         {"beta0", c.scenario.beta0},
                         {"min_distance_m", c.scenario.min_distance_m},
                         {"p_ue_max_w", c.scenario.p_ue_max_w},
                         {"f_local_max", c.scenario.f_local_max},
                         {"f_mec_max", c.scenario.f_mec_max},
                         {"kappa", c.scenario.kappa},
                         {"v_exp", c.scenario.v_exp},
                         {"task", {{"data_bits", c.scenario.task.data_bits}, {"cycles", c.scenario.task.cycles}}},
                         {"fading", to_string(c.scenario.fading)}};
  if (!c.scenario.weights.empty()) scen["weights"] = c.scenario.weights;
  if (c.scenario.seed) scen["seed"] = *c.scenario.seed;
  std::vector<Point> mec_pos = c.scenario.mec_positions;
  std::vector<UeSpec> ues = c.scenario.ues;
  if (explicit_scenario != nullptr) {
    mec_pos.clear();
    for (const auto& m : explicit_scenario->mecs) mec_pos.push_back(m.position);
    ues = explicit_scenario->ues;
    scen["seed"] = explicit_scenario->rng_seed;
    scen["n_ues"] = explicit_scenario->num_ues();
  }
  if (!mec_pos.empty()) {
    scen["mec_positions"] = nlohmann::json::array();
    for (const auto& p : mec_pos) scen["mec_positions"].push_back(detail::point_json(p));
  }
  if (!ues.empty()) {
    scen["ues"] = nlohmann::json::array();
    for (const auto& u : ues) scen["ues"].push_back(detail::ue_json(u));
  }

  nlohmann::json drl = {{"dims", c.drl.hidden},
                        {"lambda", c.drl.lambda},
                        {"t_drl", c.drl.t_drl},
                        {"phi", c.drl.phi},
                        {"batch", c.drl.batch},
                        {"learning_rate", c.drl.learning_rate},
                        {"updates_per_train", c.drl.updates_per_train},
                        {"weight_shift_epoch", nullptr},
                        {"weight_shift_low", c.drl.weight_shift_low},
                        {"weight_shift_high", c.drl.weight_shift_high},
                        {"exploration", c.drl.exploration},
                        {"search", c.drl.search == SearchKind::asa ? "asa" : "random"},
                        {"checkpoint_every", c.drl.checkpoint_every}};
  if (c.drl.weight_shift_epoch) drl["weight_shift_epoch"] = *c.drl.weight_shift_epoch;

  return {{"kind", c.kind},
          {"seed", c.seed},
          {"out", c.out_dir},
          {"scenario", scen},
          {"sae",
           {{"dims", c.sae_dims},
            {"gamma1", c.sae.gamma1},
            {"gamma2", c.sae.gamma2},
            {"t_sae", c.sae.t_sae},
            {"memory", c.sae.memory_capacity},
            {"threshold", c.sae.error_threshold},
            {"sync_period", c.sae.sync_period},
            {"retrain_iters", c.sae.retrain_iters},
            {"batch", c.sae.batch_size},
            {"learning_rate", c.sae.learning_rate},
            {"adam", c.sae.use_adam}}},
          {"drl", drl},
          {"asa",
           {{"t0", c.asa.t0},
            {"phi_cool", c.asa.cooling},
            {"t_sa", c.asa.t_sa_init},
            {"epsilon", c.asa.epsilon},
            {"t_sa_max", c.asa.t_sa_max}}},
          {"replay",
           {{"capacity", c.replay.capacity},
            {"rho_max", c.replay.rho_max},
            {"tau", c.replay.tau},
            {"eps", c.replay.eps},
            {"preserve", c.replay.preserve}}},
          {"bench",
           {{"pretrain_channels", c.bench.pretrain_channels},
            {"eval_channels", c.bench.eval_channels},
            {"timing_calls", c.bench.timing_calls},
            {"asa_only_budget", c.bench.asa_only_budget},
            {"nrr_interval", c.bench.nrr_interval},
            {"mec_counts", c.bench.mec_counts},
            {"jobs", c.bench.jobs},
            {"pso",
             {{"particles", c.bench.pso.particles},
              {"iterations", c.bench.pso.iterations},
              {"inertia", c.bench.pso.inertia},
              {"cognitive", c.bench.pso.cognitive},
              {"social", c.bench.pso.social}}}}}};
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(nlohmann::json::parse(ss.str()));
}

}  // namespace ojrs
