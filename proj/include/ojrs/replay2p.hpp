#pragma once

// Experience replay with two strategies:
//  - preserve: when full, evict the oldest transition whose policy snapshot
//    (squared parameter norm at collection) is dissimilar from the current
//    one; transitions with 1/rho_max < rho < rho_max are kept;
//  - priority: sample i with probability p_i^tau / sum_k p_k^tau where
//    p_i = |loss decrease| + eps.

#include "ojrs/mec_model.hpp"
#include "ojrs/random.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>
#include <vector>

namespace ojrs {

struct ReplayConfig {
  std::size_t capacity = 1024;
  double rho_max = 1.2;
  double tau = 0.6;
  double eps = 0.001;
  bool preserve = true;  // false: plain FIFO eviction

  void validate() const {
    if (capacity == 0) throw std::invalid_argument("replay: capacity must be positive");
    if (!(rho_max > 1.0)) throw std::invalid_argument("replay: rho_max must exceed 1");
    if (!(eps > 0.0)) throw std::invalid_argument("replay: eps must be positive");
    if (tau < 0.0) throw std::invalid_argument("replay: tau must be non-negative");
  }
};

struct Transition {
  std::vector<double> state;    // encoded state at collection
  std::vector<double> raw;      // normalized channel vector, for re-encoding
  std::uint64_t encoder_version = 0;
  OffloadDecision best_action;
  double theta_norm_sq = 0.0;   // policy ||theta||^2 at collection
  double priority = 1.0;        // |delta loss| + eps
  std::uint64_t collect_epoch = 0;
};

inline double dissimilarity(double theta_norm_now, double theta_norm_then) {
  if (!(theta_norm_then > 0.0)) throw std::invalid_argument("dissimilarity: zero reference norm");
  return theta_norm_now / theta_norm_then;
}

inline bool reusable(double rho, double rho_max) { return 1.0 / rho_max < rho && rho < rho_max; }

struct ReplayStats {
  std::size_t size = 0;
  double mean_priority = 0.0;
  std::size_t evictions = 0;
  std::size_t preserve_hits = 0;  // evictions that skipped a reusable oldest entry
};

class ReplayBuffer {
 public:
  ReplayBuffer() = default;
  explicit ReplayBuffer(ReplayConfig cfg) : cfg_(cfg) { cfg_.validate(); }

  const ReplayConfig& config() const noexcept { return cfg_; }
  std::size_t size() const noexcept { return items_.size(); }
  bool empty() const noexcept { return items_.empty(); }
  const Transition& operator[](std::size_t k) const { return items_[k]; }
  Transition& operator[](std::size_t k) { return items_[k]; }

  double max_priority() const {
    double p = 0.0;
    for (const auto& t : items_) p = std::max(p, t.priority);
    return items_.empty() ? 1.0 : p;
  }

  // New entries get the current maximal priority so each is likely sampled soon.
  void append(Transition t, double theta_norm_now) {
    t.priority = max_priority();
    if (items_.size() >= cfg_.capacity) evict(theta_norm_now);
    items_.push_back(std::move(t));
  }

  // Index of the transition the preserve rule would evict.
  std::size_t eviction_candidate(double theta_norm_now) const {
    if (!cfg_.preserve) return 0;
    for (std::size_t k = 0; k < items_.size(); ++k)
      if (!reusable(dissimilarity(theta_norm_now, items_[k].theta_norm_sq), cfg_.rho_max)) return k;
    return 0;
  }

  std::vector<double> probabilities() const {
    std::vector<double> p(items_.size());
    double total = 0.0;
    for (std::size_t k = 0; k < items_.size(); ++k) total += (p[k] = std::pow(items_[k].priority, cfg_.tau));
    for (auto& v : p) v /= total;
    return p;
  }

  // With replacement, P_i proportional to p_i^tau.
  std::vector<std::size_t> sample(std::size_t batch_size, Rng& rng) const {
    if (items_.empty()) throw std::logic_error("replay: sampling from an empty buffer");
    std::vector<double> cum(items_.size());
    double total = 0.0;
    for (std::size_t k = 0; k < items_.size(); ++k) cum[k] = (total += std::pow(items_[k].priority, cfg_.tau));
    std::vector<std::size_t> out(batch_size);
    for (auto& idx : out) {
      const double u = uniform01(rng) * total;
      idx = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
      idx = std::min(idx, items_.size() - 1);
    }
    return out;
  }

  void update_stats(const std::vector<std::size_t>& sampled, double delta_loss) {
    const double p = std::abs(delta_loss) + cfg_.eps;
    for (auto k : sampled) items_.at(k).priority = p;
  }

  ReplayStats stats() const {
    ReplayStats s;
    s.size = items_.size();
    for (const auto& t : items_) s.mean_priority += t.priority;
    if (!items_.empty()) s.mean_priority /= static_cast<double>(items_.size());
    s.evictions = evictions_;
    s.preserve_hits = preserve_hits_;
    return s;
  }

 private:
  void evict(double theta_norm_now) {
    const std::size_t k = eviction_candidate(theta_norm_now);
    if (k != 0) ++preserve_hits_;
    items_.erase(items_.begin() + static_cast<std::ptrdiff_t>(k));
    ++evictions_;
  }

  ReplayConfig cfg_;
  std::deque<Transition> items_;
  std::size_t evictions_ = 0;
  std::size_t preserve_hits_ = 0;
};

}  // namespace ojrs
