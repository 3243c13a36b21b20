#pragma once

// Outer learning loop: the policy network maps the compressed channel state
// to an offloading decision (per-UE argmax over a one-hot head), the exact
// allocator scores it, annealing improves it into a training label, and the
// policy is periodically fit to prioritized replay samples with a
// regularized cross-entropy loss.

#include "ojrs/allocator.hpp"
#include "ojrs/asa.hpp"
#include "ojrs/mec_model.hpp"
#include "ojrs/neural.hpp"
#include "ojrs/random.hpp"
#include "ojrs/replay2p.hpp"
#include "ojrs/sae2r.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

namespace ojrs {

enum class SearchKind { asa, random };

struct DrlConfig {
  std::vector<std::size_t> hidden{120, 80};
  double lambda = 0.02;
  std::size_t t_drl = 10000;
  std::size_t phi = 10;             // epochs between training events
  std::size_t batch = 64;
  double learning_rate = 1e-3;
  std::size_t updates_per_train = 1;
  std::optional<std::size_t> weight_shift_epoch;
  double weight_shift_low = 0.5;    // new weights ~ U[low, high]
  double weight_shift_high = 2.0;
  double exploration = 0.0;         // epsilon-greedy rate (baseline variant only)
  SearchKind search = SearchKind::asa;
  std::size_t checkpoint_every = 0;  // policy snapshots during train; 0 keeps only the final one

  void validate() const {
    if (phi < 1) throw std::invalid_argument("drl: phi must be >= 1");
    if (batch < 1) throw std::invalid_argument("drl: batch must be >= 1");
    if (lambda < 0.0) throw std::invalid_argument("drl: lambda must be non-negative");
    if (updates_per_train < 1) throw std::invalid_argument("drl: updates_per_train must be >= 1");
    if (exploration < 0.0 || exploration > 1.0) throw std::invalid_argument("drl: exploration must be in [0,1]");
    if (!(weight_shift_low > 0.0) || weight_shift_high < weight_shift_low)
      throw std::invalid_argument("drl: invalid weight shift range");
  }
};

inline Network make_policy(std::size_t state_dim, std::size_t n_ues, std::size_t n_mecs, const DrlConfig& cfg,
                           Rng& rng) {
  std::vector<std::size_t> dims{state_dim};
  dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
  dims.push_back(n_ues * (n_mecs + 1));
  return Network(Network::chain(dims, Activation::relu, Activation::sigmoid), rng);
}

// Per-UE argmax over its M+1 outputs; ties go to the lowest index.
inline OffloadDecision decode_outputs(std::span<const double> out, std::size_t n_ues, std::size_t n_mecs) {
  const std::size_t k = n_mecs + 1;
  if (out.size() != n_ues * k) throw std::invalid_argument("policy output has wrong width");
  OffloadDecision d;
  d.assign.resize(n_ues);
  for (std::size_t i = 0; i < n_ues; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < k; ++j)
      if (out[i * k + j] > out[i * k + best]) best = j;
    d[i] = static_cast<int>(best);
  }
  return d;
}

inline OffloadDecision decide(const Network& policy, std::span<const double> state, std::size_t n_ues,
                              std::size_t n_mecs) {
  return decode_outputs(predict(policy, state), n_ues, n_mecs);
}

inline std::vector<double> one_hot(const OffloadDecision& d, std::size_t n_mecs) {
  std::vector<double> v(d.size() * (n_mecs + 1), 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) v[i * (n_mecs + 1) + static_cast<std::size_t>(d[i])] = 1.0;
  return v;
}

constexpr double kProbClamp = 1e-12;

// -(1/P) sum [y^T ln a + (1-y)^T ln(1-a)] + (lambda/2) ||theta||^2, with the
// predictions clamped to [1e-12, 1 - 1e-12]. Accumulates the gradient when asked.
inline double policy_loss(const Network& policy, std::span<const std::vector<double>> states,
                          std::span<const std::vector<double>> labels, double lambda, Gradients* grad = nullptr) {
  if (states.empty() || states.size() != labels.size()) throw std::invalid_argument("policy_loss: bad batch");
  const double inv = 1.0 / static_cast<double>(states.size());
  double total = 0.0;
  std::vector<double> dout(policy.output_dim());
  for (std::size_t s = 0; s < states.size(); ++s) {
    const auto cache = forward(policy, states[s]);
    const auto a = cache.output();
    const auto& y = labels[s];
    if (y.size() != a.size()) throw std::invalid_argument("policy_loss: label width mismatch");
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double p = std::clamp(a[k], kProbClamp, 1.0 - kProbClamp);
      total -= y[k] * std::log(p) + (1.0 - y[k]) * std::log(1.0 - p);
      const bool clamped = a[k] < kProbClamp || a[k] > 1.0 - kProbClamp;
      dout[k] = clamped ? 0.0 : inv * (-y[k] / p + (1.0 - y[k]) / (1.0 - p));
    }
    if (grad != nullptr) backward(policy, cache, dout, *grad);
  }
  total *= inv;
  if (lambda != 0.0) {
    total += 0.5 * lambda * l2_norm_sq(policy);
    if (grad != nullptr) add_l2_gradient(policy, lambda, *grad);
  }
  return total;
}

struct TrainStats {
  bool trained = false;
  double loss = 0.0;         // delta_t
  double delta_loss = 0.0;   // delta_{previous event} - delta_t
  double theta_norm_sq = 0.0;
  std::vector<std::size_t> sampled;
};

// Policy parameters, optimizer and the loss bookkeeping between training events.
class PolicyTrainer {
 public:
  PolicyTrainer() = default;
  PolicyTrainer(Network policy, const DrlConfig& cfg)
      : policy_(std::move(policy)), adam_(policy_, {.learning_rate = cfg.learning_rate}) {}

  const Network& policy() const noexcept { return policy_; }
  Network& policy() noexcept { return policy_; }
  std::optional<double> last_loss() const noexcept { return last_loss_; }

  // One training event: updates_per_train prioritized batches, one Adam step
  // each. delta_t is the mean pre-update batch loss of the event.
  TrainStats train_step(ReplayBuffer& buffer, const StackedAutoencoder& sae, std::size_t n_mecs, const DrlConfig& cfg,
                        Rng& rng) {
    TrainStats st;
    if (buffer.empty()) {
      st.theta_norm_sq = l2_norm_sq(policy_);
      return st;
    }
    double loss_sum = 0.0;
    std::vector<std::vector<double>> states(cfg.batch);
    std::vector<std::vector<double>> labels(cfg.batch);
    for (std::size_t u = 0; u < cfg.updates_per_train; ++u) {
      const auto idx = buffer.sample(cfg.batch, rng);
      for (std::size_t b = 0; b < idx.size(); ++b) {
        auto& t = buffer[idx[b]];
        if (t.encoder_version != sae.encoder_version()) {
          t.state = sae.encode(t.raw).values;
          t.encoder_version = sae.encoder_version();
        }
        states[b] = t.state;
        labels[b] = one_hot(t.best_action, n_mecs);
      }
      auto g = zero_gradients(policy_);
      const double loss = policy_loss(policy_, states, labels, cfg.lambda, &g);
      if (!std::isfinite(loss)) throw std::runtime_error("policy training produced a non-finite loss");
      adam_.step(policy_, g);
      loss_sum += loss;
      st.sampled.insert(st.sampled.end(), idx.begin(), idx.end());
    }
    st.trained = true;
    st.loss = loss_sum / static_cast<double>(cfg.updates_per_train);
    st.delta_loss = last_loss_ ? *last_loss_ - st.loss : 0.0;
    last_loss_ = st.loss;
    st.theta_norm_sq = l2_norm_sq(policy_);
    return st;
  }

 private:
  Network policy_;
  Adam adam_;
  std::optional<double> last_loss_;
};

struct EpochLog {
  std::uint64_t epoch = 0;
  double reward = 0.0;
  double latency = 0.0;
  double loss = 0.0;
  double delta_loss = 0.0;
  bool trained = false;
  std::size_t t_sa = 0;
  double asa_best_objective = 0.0;
  ReplayStats replay;
  double decision_ms = 0.0;
  double asa_ms = 0.0;
};

// Everything one learner owns. Independent agents share no mutable state.
class OjrsAgent {
 public:
  OjrsAgent(Scenario scenario, StackedAutoencoder sae, DrlConfig drl, AsaConfig asa, ReplayConfig replay,
            std::uint64_t seed)
      : scenario_(std::move(scenario)),
        sae_(std::move(sae)),
        drl_(std::move(drl)),
        asa_cfg_(asa),
        buffer_(replay),
        seed_(seed),
        asa_rng_(make_rng(seed, Stream::asa)),
        replay_rng_(make_rng(seed, Stream::replay)),
        sae_rng_(make_rng(seed, Stream::sae)),
        weight_rng_(make_rng(seed, Stream::weights)),
        explore_rng_(make_rng(seed, Stream::exploration)) {
    scenario_.validate();
    drl_.validate();
    asa_cfg_.validate();
    asa_state_.budget = asa_cfg_.t_sa_init;
    auto init_rng = make_rng(seed, Stream::policy_init);
    trainer_ = PolicyTrainer(make_policy(sae_.code_dim(), n_ues(), n_mecs(), drl_, init_rng), drl_);
  }

  std::size_t n_ues() const noexcept { return scenario_.num_ues(); }
  std::size_t n_mecs() const noexcept { return scenario_.num_mecs(); }
  const Scenario& scenario() const noexcept { return scenario_; }
  const StackedAutoencoder& sae() const noexcept { return sae_; }
  const Network& policy() const noexcept { return trainer_.policy(); }
  const ReplayBuffer& buffer() const noexcept { return buffer_; }
  const AsaState& asa_state() const noexcept { return asa_state_; }
  const DrlConfig& drl_config() const noexcept { return drl_; }
  std::uint64_t channel_seed() const noexcept { return derive_seed(seed_, static_cast<std::uint64_t>(Stream::channel)); }

  ChannelState channel_at(std::uint64_t epoch) const { return sample_channel_state(scenario_, epoch, channel_seed()); }

  // Online path: encode, forward pass, decode. No search.
  OffloadDecision decide(const ChannelState& channel) const {
    const auto x = sae_.rasterize(channel);
    return ojrs::decide(trainer_.policy(), sae_.encode(x).values, n_ues(), n_mecs());
  }

  // Replaces the policy, e.g. with one restored from a checkpoint.
  void load_policy(Network policy) {
    if (policy.input_dim() != sae_.code_dim() || policy.output_dim() != n_ues() * (n_mecs() + 1))
      throw std::invalid_argument("policy shape does not match the scenario and encoder");
    trainer_ = PolicyTrainer(std::move(policy), drl_);
  }

  void shift_weights() {
    std::uniform_real_distribution<double> dist(drl_.weight_shift_low, drl_.weight_shift_high);
    for (auto& ue : scenario_.ues) ue.task.weight = dist(weight_rng_);
  }

  EpochLog step(std::uint64_t t) {
    using clock = std::chrono::steady_clock;
    if (drl_.weight_shift_epoch && t == *drl_.weight_shift_epoch) shift_weights();
    EpochLog log;
    log.epoch = t;
    const auto channel = channel_at(t);

    const auto x = sae_.rasterize(channel);
    sae_.observe(x);
    if (!sae_.passthrough() && (t + 1) % sae_.config().sync_period == 0 && !sae_.memory().empty()) {
      sae_.fit(sae_.config().retrain_iters, sae_rng_);
      sae_.sync();
    }

    const auto t0 = clock::now();
    const auto state = sae_.encode(x, t);
    auto a_t = ojrs::decide(trainer_.policy(), state.values, n_ues(), n_mecs());
    if (drl_.exploration > 0.0 && uniform01(explore_rng_) < drl_.exploration) a_t = random_decision(explore_rng_);
    const auto alloc = evaluate(a_t, scenario_, channel);
    const auto t1 = clock::now();
    log.reward = alloc.reward;
    log.latency = alloc.latency;

    const PlacementCosts costs(scenario_, channel);
    AsaResult found;
    if (drl_.search == SearchKind::asa)
      found = search(a_t, channel, costs, asa_cfg_, asa_state_.budget, asa_rng_);
    else
      found = random_search(a_t, costs, asa_state_.budget);
    const auto t2 = clock::now();
    log.asa_best_objective = found.best_objective;

    const double theta_now = l2_norm_sq(trainer_.policy());
    Transition tr;
    tr.state = state.values;
    tr.raw = x;
    tr.encoder_version = sae_.encoder_version();
    tr.best_action = std::move(found.best);
    tr.theta_norm_sq = theta_now;
    tr.collect_epoch = t;
    buffer_.append(std::move(tr), theta_now);

    if ((t + 1) % drl_.phi == 0) {
      auto st = trainer_.train_step(buffer_, sae_, n_mecs(), drl_, replay_rng_);
      if (st.trained) {
        if (drl_.search == SearchKind::asa) adapt_budget(asa_state_, st.delta_loss, asa_cfg_.epsilon, asa_cfg_.t_sa_max);
        buffer_.update_stats(st.sampled, st.delta_loss);
        log.trained = true;
        log.delta_loss = st.delta_loss;
      }
    }
    log.loss = trainer_.last_loss().value_or(0.0);
    log.t_sa = asa_state_.budget;
    log.replay = buffer_.stats();
    log.decision_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    log.asa_ms = std::chrono::duration<double, std::milli>(t2 - t1).count();
    return log;
  }

  // Runs epochs [first, first + count); the observer sees each log as it is produced.
  std::vector<EpochLog> run(std::size_t count, std::uint64_t first = 0,
                            const std::function<void(const EpochLog&)>& observer = {}) {
    std::vector<EpochLog> logs;
    logs.reserve(count);
    for (std::uint64_t t = first; t < first + count; ++t) {
      logs.push_back(step(t));
      if (observer) observer(logs.back());
    }
    return logs;
  }

 private:
  OffloadDecision random_decision(Rng& rng) const {
    OffloadDecision d;
    d.assign.resize(n_ues());
    std::uniform_int_distribution<int> pick(0, static_cast<int>(n_mecs()));
    for (auto& a : d.assign) a = pick(rng);
    return d;
  }

  AsaResult random_search(const OffloadDecision& initial, const PlacementCosts& costs, std::size_t budget) {
    AsaResult r;
    r.best = initial;
    r.best_objective = r.initial_objective = costs.latency(initial);
    for (std::size_t g = 0; g < budget; ++g) {
      auto d = random_decision(asa_rng_);
      const double f = costs.latency(d);
      if (f < r.best_objective) {
        r.best = std::move(d);
        r.best_objective = f;
      }
      r.best_trace.push_back(r.best_objective);
    }
    return r;
  }

  Scenario scenario_;
  StackedAutoencoder sae_;
  DrlConfig drl_;
  AsaConfig asa_cfg_;
  AsaState asa_state_;
  ReplayBuffer buffer_;
  PolicyTrainer trainer_;
  std::uint64_t seed_;
  Rng asa_rng_, replay_rng_, sae_rng_, weight_rng_, explore_rng_;
};

}  // namespace ojrs
