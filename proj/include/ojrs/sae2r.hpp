#pragma once

// Related and regularized stacked autoencoder. Compresses the rasterized
// channel-gain matrix into the policy state. The loss adds to the absolute
// reconstruction error a per-UE relative term (each row divided by its
// maximum, for the input and the reconstruction separately) and an L2
// penalty on all parameters.

#include "ojrs/mec_model.hpp"
#include "ojrs/neural.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace ojrs {

struct SaeConfig {
  std::vector<std::size_t> encoder_dims{60, 45, 30};  // input first; decoder mirrors
  double gamma1 = 0.5;
  double gamma2 = 0.08;
  std::size_t t_sae = 500;          // offline training iterations
  std::size_t memory_capacity = 4096;
  double error_threshold = 0.01;    // admission gate on per-entry squared error
  std::size_t sync_period = 500;    // epochs between online-encoder syncs
  std::size_t retrain_iters = 100;  // incremental iterations at each sync
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  bool use_adam = true;             // false: plain gradient descent

  std::size_t input_dim() const { return encoder_dims.front(); }
  std::size_t output_dim() const { return encoder_dims.back(); }
  bool passthrough() const { return encoder_dims.size() >= 2 && output_dim() == input_dim(); }

  void validate() const {
    if (encoder_dims.size() < 2) throw std::invalid_argument("sae: need input and code dimensions");
    for (auto d : encoder_dims)
      if (d == 0) throw std::invalid_argument("sae: zero layer width");
    if (output_dim() > input_dim()) throw std::invalid_argument("sae: code wider than input");
    if (gamma1 < 0.0 || gamma2 < 0.0) throw std::invalid_argument("sae: negative loss coefficient");
    if (memory_capacity == 0 || batch_size == 0) throw std::invalid_argument("sae: zero capacity or batch");
    if (sync_period == 0) throw std::invalid_argument("sae: sync period must be >= 1");
  }
};

inline double compression_ratio(std::size_t input_dim, std::size_t code_dim) {
  return 1.0 - static_cast<double>(code_dim) / static_cast<double>(input_dim);
}

// log10 gains, min-max scaled with bounds tracked over the observed data and
// padded by a small margin; frozen once the autoencoder is trained on them.
class GainNormalizer {
 public:
  void observe(std::span<const double> gains) {
    if (frozen_) return;
    for (double g : gains) {
      const double v = std::log10(g);
      lo_ = std::min(lo_, v);
      hi_ = std::max(hi_, v);
    }
  }
  void freeze() {
    if (!fitted()) throw std::logic_error("normalizer has no observations");
    frozen_ = true;
  }
  bool frozen() const noexcept { return frozen_; }
  bool fitted() const noexcept { return hi_ >= lo_; }

  double lower() const { return lo_ - margin(); }
  double upper() const { return hi_ + margin(); }

  double apply(double gain) const {
    if (!fitted()) throw std::logic_error("normalizer used before observing data");
    const double v = (std::log10(gain) - lower()) / (upper() - lower());
    return std::clamp(v, 0.0, 1.0);
  }

  static GainNormalizer from_bounds(double lo, double hi) {
    GainNormalizer n;
    n.lo_ = lo;
    n.hi_ = hi;
    n.frozen_ = true;
    return n;
  }
  double raw_lo() const { return lo_; }
  double raw_hi() const { return hi_; }

 private:
  double margin() const { return hi_ > lo_ ? 0.05 * (hi_ - lo_) : 0.5; }
  double lo_ = std::numeric_limits<double>::infinity();
  double hi_ = -std::numeric_limits<double>::infinity();
  bool frozen_ = false;
};

// Row-major flattening (entry (i, j) at i * M + j) followed by normalization.
inline std::vector<double> rasterize(const ChannelState& c, const GainNormalizer& norm) {
  std::vector<double> x(c.gains.size());
  for (std::size_t k = 0; k < x.size(); ++k) x[k] = norm.apply(c.gains[k]);
  return x;
}

struct EncodedState {
  std::vector<double> values;
  std::uint64_t epoch = 0;
};

class SaeMemory {
 public:
  explicit SaeMemory(std::size_t capacity = 4096) : capacity_(capacity) {}
  void push(std::vector<double> x) {
    if (items_.size() == capacity_) items_.pop_front();
    items_.push_back(std::move(x));
  }
  std::size_t size() const noexcept { return items_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  bool empty() const noexcept { return items_.empty(); }
  const std::vector<double>& operator[](std::size_t k) const { return items_[k]; }
  const std::deque<std::vector<double>>& items() const noexcept { return items_; }

 private:
  std::size_t capacity_;
  std::deque<std::vector<double>> items_;
};

inline Network make_autoencoder(const SaeConfig& cfg, Rng& rng) {
  cfg.validate();
  std::vector<std::size_t> dims = cfg.encoder_dims;
  for (std::size_t k = cfg.encoder_dims.size() - 1; k-- > 0;) dims.push_back(cfg.encoder_dims[k]);
  return Network(Network::chain(dims, Activation::sigmoid, Activation::sigmoid), rng);
}

// Mean over the batch and over entries of the squared reconstruction error.
inline double mse_loss(const Network& net, std::span<const std::vector<double>> batch) {
  double total = 0.0;
  for (const auto& x : batch) {
    const auto y = predict(net, x);
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) s += (x[k] - y[k]) * (x[k] - y[k]);
    total += s / static_cast<double>(x.size());
  }
  return total / static_cast<double>(batch.size());
}

namespace detail {
constexpr double kRowMaxFloor = 1e-9;

inline std::size_t row_argmax(std::span<const double> v, std::size_t row, std::size_t m) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < m; ++j)
    if (v[row * m + j] > v[row * m + best]) best = j;
  return best;
}
}  // namespace detail

// Batch-averaged 2r loss; accumulates its parameter gradient into grad when given.
inline double loss_2r(const Network& net, std::span<const std::vector<double>> batch, std::size_t n_ues,
                      std::size_t n_mecs, double gamma1, double gamma2, Gradients* grad = nullptr) {
  if (batch.empty()) throw std::invalid_argument("loss_2r: empty batch");
  const std::size_t n = n_ues * n_mecs;
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  std::vector<double> dy(n);
  for (const auto& x : batch) {
    if (x.size() != n) throw std::invalid_argument("loss_2r: vector is not N*M long");
    const auto cache = forward(net, x);
    const auto y = cache.output();
    double abs_term = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double e = x[k] - y[k];
      abs_term += e * e;
      dy[k] = -2.0 * e / static_cast<double>(n);
    }
    abs_term /= static_cast<double>(n);

    double rel_term = 0.0;
    for (std::size_t i = 0; i < n_ues; ++i) {
      const double mx = std::max(x[i * n_mecs + detail::row_argmax(x, i, n_mecs)], detail::kRowMaxFloor);
      const std::size_t kstar = detail::row_argmax(y, i, n_mecs);
      const double my = std::max(y[i * n_mecs + kstar], detail::kRowMaxFloor);
      double via_max = 0.0;
      for (std::size_t j = 0; j < n_mecs; ++j) {
        const double yij = y[i * n_mecs + j];
        const double d = x[i * n_mecs + j] / mx - yij / my;
        rel_term += d * d;
        dy[i * n_mecs + j] += gamma1 * d * (-1.0 / my);
        via_max += gamma1 * d * yij / (my * my);
      }
      if (y[i * n_mecs + kstar] > detail::kRowMaxFloor) dy[i * n_mecs + kstar] += via_max;
    }
    total += abs_term + 0.5 * gamma1 * rel_term;
    if (grad != nullptr) {
      for (auto& v : dy) v *= inv_batch;
      backward(net, cache, dy, *grad);
    }
  }
  total *= inv_batch;
  if (gamma2 != 0.0) {
    total += 0.5 * gamma2 * l2_norm_sq(net);
    if (grad != nullptr) add_l2_gradient(net, gamma2, *grad);
  }
  return total;
}

inline double reconstruction_error(const Network& net, std::span<const double> x) {
  const auto y = predict(net, x);
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) s += (x[k] - y[k]) * (x[k] - y[k]);
  return s / static_cast<double>(x.size());
}

// Admits x iff its reconstruction error exceeds the threshold.
inline bool memory_update(SaeMemory& memory, std::span<const double> x, const Network& net, double threshold) {
  if (reconstruction_error(net, x) <= threshold) return false;
  memory.push(std::vector<double>(x.begin(), x.end()));
  return true;
}

struct SaeTrainResult {
  std::vector<double> loss_trace;
};

inline SaeTrainResult train(Network& net, const SaeMemory& memory, const SaeConfig& cfg, std::size_t n_ues,
                            std::size_t n_mecs, std::size_t iterations, Rng& rng, Adam* adam = nullptr) {
  if (memory.empty()) throw std::invalid_argument("sae train: empty memory");
  Adam local;
  if (cfg.use_adam && adam == nullptr) {
    local = Adam(net, {.learning_rate = cfg.learning_rate});
    adam = &local;
  }
  SaeTrainResult result;
  result.loss_trace.reserve(iterations);
  std::vector<std::vector<double>> batch(cfg.batch_size);
  for (std::size_t it = 0; it < iterations; ++it) {
    for (auto& b : batch) b = memory[uniform_index(rng, memory.size())];
    auto g = zero_gradients(net);
    const double loss = loss_2r(net, batch, n_ues, n_mecs, cfg.gamma1, cfg.gamma2, &g);
    if (!std::isfinite(loss)) throw std::runtime_error("sae train: non-finite loss");
    result.loss_trace.push_back(loss);
    if (cfg.use_adam)
      adam->step(net, g);
    else
      sgd_step(net, g, cfg.learning_rate);
  }
  return result;
}

inline SaeTrainResult train(Network& net, const SaeMemory& memory, const SaeConfig& cfg, std::size_t n_ues,
                            std::size_t n_mecs, Rng& rng) {
  return train(net, memory, cfg, n_ues, n_mecs, cfg.t_sae, rng);
}

inline EncodedState encode(const Network& encoder, std::span<const double> x, std::uint64_t epoch = 0) {
  return {predict(encoder, x), epoch};
}

// 1 - mean relative absolute error over all entries, clamped to [0, 1].
inline double reconstruction_accuracy(const std::vector<std::vector<double>>& inputs,
                                      const std::vector<std::vector<double>>& reconstructions) {
  if (inputs.empty() || inputs.size() != reconstructions.size())
    throw std::invalid_argument("accuracy: empty or mismatched sets");
  double err = 0.0;
  std::size_t count = 0;
  for (std::size_t s = 0; s < inputs.size(); ++s)
    for (std::size_t k = 0; k < inputs[s].size(); ++k) {
      err += std::abs(inputs[s][k] - reconstructions[s][k]) / std::max(std::abs(inputs[s][k]), 1e-9);
      ++count;
    }
  return std::clamp(1.0 - err / static_cast<double>(count), 0.0, 1.0);
}

inline double reconstruction_accuracy(const Network& net, const std::vector<std::vector<double>>& test_set) {
  std::vector<std::vector<double>> recon;
  recon.reserve(test_set.size());
  for (const auto& x : test_set) recon.push_back(predict(net, x));
  return reconstruction_accuracy(test_set, recon);
}

// Autoencoder plus its normalizer, training memory and the online encoder
// snapshot used by the policy. When the code is as wide as the input the
// autoencoder is bypassed and the normalized vector is the state.
class StackedAutoencoder {
 public:
  StackedAutoencoder() = default;
  StackedAutoencoder(SaeConfig cfg, std::size_t n_ues, std::size_t n_mecs, Rng& rng)
      : cfg_(std::move(cfg)), n_ues_(n_ues), n_mecs_(n_mecs), memory_(cfg_.memory_capacity) {
    cfg_.validate();
    if (cfg_.input_dim() != n_ues * n_mecs) throw std::invalid_argument("sae: input width must equal N*M");
    if (!cfg_.passthrough()) {
      net_ = make_autoencoder(cfg_, rng);
      adam_ = Adam(net_, {.learning_rate = cfg_.learning_rate});
      sync();
    }
  }

  const SaeConfig& config() const noexcept { return cfg_; }
  bool passthrough() const noexcept { return cfg_.passthrough(); }
  std::size_t code_dim() const noexcept { return cfg_.output_dim(); }
  double compression_ratio() const { return ojrs::compression_ratio(cfg_.input_dim(), cfg_.output_dim()); }
  const Network& network() const noexcept { return net_; }
  const Network& online_encoder() const noexcept { return encoder_; }
  std::uint64_t encoder_version() const noexcept { return version_; }
  GainNormalizer& normalizer() noexcept { return norm_; }
  const GainNormalizer& normalizer() const noexcept { return norm_; }
  SaeMemory& memory() noexcept { return memory_; }

  std::vector<double> rasterize(const ChannelState& c) const { return ojrs::rasterize(c, norm_); }

  // Error-gated admission into the training memory; no-op in bypass mode.
  bool observe(std::span<const double> x) {
    if (passthrough()) return false;
    return memory_update(memory_, x, net_, cfg_.error_threshold);
  }

  SaeTrainResult fit(std::size_t iterations, Rng& rng) {
    if (passthrough() || iterations == 0) return {};
    auto r = ojrs::train(net_, memory_, cfg_, n_ues_, n_mecs_, iterations, rng, cfg_.use_adam ? &adam_ : nullptr);
    return r;
  }

  void sync() {
    if (passthrough()) return;
    encoder_ = net_.slice(0, cfg_.encoder_dims.size() - 1);
    ++version_;
  }

  EncodedState encode(std::span<const double> x, std::uint64_t epoch = 0) const {
    if (passthrough()) return {std::vector<double>(x.begin(), x.end()), epoch};
    return ojrs::encode(encoder_, x, epoch);
  }

  std::vector<double> reconstruct(std::span<const double> x) const {
    if (passthrough()) return std::vector<double>(x.begin(), x.end());
    return predict(net_, x);
  }

  double accuracy(const std::vector<std::vector<double>>& test_set) const {
    if (passthrough()) return 1.0;
    return reconstruction_accuracy(net_, test_set);
  }

  // Offline stage: observe channels, fit the normalizer, admit by error
  // check and train for t_sae iterations, then publish the encoder.
  SaeTrainResult pretrain(const std::vector<ChannelState>& channels, Rng& rng) {
    for (const auto& c : channels) norm_.observe(c.gains);
    norm_.freeze();
    for (const auto& c : channels) observe(rasterize(c));
    if (passthrough() || memory_.empty()) return {};
    auto r = fit(cfg_.t_sae, rng);
    sync();
    return r;
  }

  Checkpoint checkpoint(std::uint64_t seed, std::uint64_t epoch) const {
    Checkpoint c;
    c.net = passthrough() ? Network(std::vector<LayerSpec>{{cfg_.input_dim(), cfg_.input_dim(), Activation::linear}}) : net_;
    c.seed = seed;
    c.epoch = epoch;
    c.extra = {{"kind", "sae"},
               {"n_ues", n_ues_},
               {"n_mecs", n_mecs_},
               {"encoder_dims", cfg_.encoder_dims},
               {"passthrough", passthrough()},
               {"norm_lo", norm_.raw_lo()},
               {"norm_hi", norm_.raw_hi()}};
    return c;
  }

  static StackedAutoencoder from_checkpoint(const Checkpoint& c, SaeConfig cfg) {
    if (c.extra.value("kind", "") != "sae") throw std::invalid_argument("not an autoencoder checkpoint");
    StackedAutoencoder s;
    cfg.encoder_dims = c.extra.at("encoder_dims").get<std::vector<std::size_t>>();
    s.cfg_ = std::move(cfg);
    s.cfg_.validate();
    s.n_ues_ = c.extra.at("n_ues").get<std::size_t>();
    s.n_mecs_ = c.extra.at("n_mecs").get<std::size_t>();
    s.memory_ = SaeMemory(s.cfg_.memory_capacity);
    s.norm_ = GainNormalizer::from_bounds(c.extra.at("norm_lo").get<double>(), c.extra.at("norm_hi").get<double>());
    if (!s.passthrough()) {
      s.net_ = c.net;
      s.adam_ = Adam(s.net_, {.learning_rate = s.cfg_.learning_rate});
      s.sync();
    }
    return s;
  }

 private:
  SaeConfig cfg_;
  std::size_t n_ues_ = 0;
  std::size_t n_mecs_ = 0;
  GainNormalizer norm_;
  SaeMemory memory_;
  Network net_;
  Network encoder_;
  Adam adam_;
  std::uint64_t version_ = 0;
};

}  // namespace ojrs
