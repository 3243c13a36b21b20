#pragma once

// Physical model of a multi-user, multi-server edge computing cell:
// UE tasks, server capacities, distance-based channel gains with small-scale
// fading, Shannon rates, and the weighted task-latency objective.

#include "ojrs/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ojrs {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct Task {
  double cycles = 1e9;      // F_i, CPU cycles
  double data_bits = 8e5;   // D_i, upload size (100 kB)
  double weight = 1.0;      // w_i
};

struct UeSpec {
  Point position;
  Task task;
  double f_local_max = 1e9;  // cycles/s
  double p_ue_max = 1.0;     // W
  double kappa = 1e-27;      // effective switched capacitance
  double v_exp = 3.0;
};

struct MecSpec {
  Point position;
  double f_mec_max = 5e10;  // cycles/s
};

struct RadioParams {
  double bandwidth = 1e6;     // Hz
  double noise = 1e-10;       // W
  double beta0 = 1e-3;        // gain at the reference distance
  double min_distance = 1.0;  // m
};

enum class FadingMode { rayleigh, deterministic };

inline std::string to_string(FadingMode m) {
  return m == FadingMode::rayleigh ? "rayleigh" : "deterministic";
}

inline FadingMode fading_mode_from_string(const std::string& s) {
  if (s == "rayleigh") return FadingMode::rayleigh;
  if (s == "deterministic") return FadingMode::deterministic;
  throw std::invalid_argument("unknown fading mode: " + s);
}

struct Scenario {
  std::vector<UeSpec> ues;
  std::vector<MecSpec> mecs;
  RadioParams radio;
  FadingMode fading = FadingMode::rayleigh;
  double area = 50.0;  // side of the square deployment area, m
  std::uint64_t rng_seed = 0;

  std::size_t num_ues() const noexcept { return ues.size(); }
  std::size_t num_mecs() const noexcept { return mecs.size(); }
  // Number of placements per UE, local included.
  std::size_t num_choices() const noexcept { return mecs.size() + 1; }

  void validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("scenario: " + what); };
    auto inside = [this](const Point& p) {
      return std::isfinite(p.x) && std::isfinite(p.y) && p.x >= 0.0 && p.y >= 0.0 && p.x <= area &&
             p.y <= area;
    };
    if (ues.empty()) fail("at least one UE required");
    if (mecs.empty()) fail("at least one MEC required");
    if (!(area > 0.0)) fail("area must be positive");
    for (std::size_t i = 0; i < ues.size(); ++i) {
      const auto& u = ues[i];
      const auto tag = "UE " + std::to_string(i) + ": ";
      if (!(u.task.cycles > 0.0)) fail(tag + "cycles must be positive");
      if (!(u.task.data_bits > 0.0)) fail(tag + "data size must be positive");
      if (!(u.task.weight > 0.0)) fail(tag + "weight must be positive");
      if (!(u.f_local_max > 0.0)) fail(tag + "local capability must be positive");
      if (!(u.p_ue_max > 0.0)) fail(tag + "power budget must be positive");
      if (!(u.kappa >= 0.0)) fail(tag + "kappa must be non-negative");
      if (!(u.v_exp >= 1.0)) fail(tag + "exponent must be >= 1");
      if (!inside(u.position)) fail(tag + "position outside the area");
    }
    for (std::size_t j = 0; j < mecs.size(); ++j) {
      if (!(mecs[j].f_mec_max > 0.0)) fail("MEC " + std::to_string(j) + ": capacity must be positive");
      if (!inside(mecs[j].position)) fail("MEC " + std::to_string(j) + ": position outside the area");
    }
    if (!(radio.bandwidth > 0.0) || !(radio.noise > 0.0) || !(radio.beta0 > 0.0) ||
        !(radio.min_distance > 0.0))
      fail("radio parameters must be positive");
  }
};

// N x M matrix of channel power gains, row-major (UE-major).
struct ChannelState {
  std::size_t n_ues = 0;
  std::size_t n_mecs = 0;
  std::uint64_t epoch = 0;
  std::vector<double> gains;

  double gain(std::size_t i, std::size_t j) const { return gains[i * n_mecs + j]; }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(gains).subspan(i * n_mecs, n_mecs);
  }
};

// Per-UE placement: 0 executes locally, k in 1..M offloads to MEC k.
struct OffloadDecision {
  std::vector<int> assign;

  std::size_t size() const noexcept { return assign.size(); }
  int operator[](std::size_t i) const { return assign[i]; }
  int& operator[](std::size_t i) { return assign[i]; }
  bool operator==(const OffloadDecision&) const = default;

  void validate(std::size_t n_ues, std::size_t n_mecs) const {
    if (assign.size() != n_ues) throw std::invalid_argument("decision length does not match UE count");
    for (int a : assign)
      if (a < 0 || static_cast<std::size_t>(a) > n_mecs)
        throw std::invalid_argument("placement index out of range");
  }

  // Binary a_ij matrix, N x (M+1), column 0 is local execution.
  std::vector<std::uint8_t> to_matrix(std::size_t n_mecs) const {
    std::vector<std::uint8_t> m(assign.size() * (n_mecs + 1), 0);
    for (std::size_t i = 0; i < assign.size(); ++i) m[i * (n_mecs + 1) + static_cast<std::size_t>(assign[i])] = 1;
    return m;
  }

  static OffloadDecision from_matrix(std::span<const std::uint8_t> m, std::size_t n_ues, std::size_t n_mecs) {
    if (m.size() != n_ues * (n_mecs + 1)) throw std::invalid_argument("matrix shape mismatch");
    OffloadDecision d;
    d.assign.resize(n_ues);
    for (std::size_t i = 0; i < n_ues; ++i) {
      int chosen = -1;
      for (std::size_t j = 0; j <= n_mecs; ++j) {
        if (m[i * (n_mecs + 1) + j] == 0) continue;
        if (m[i * (n_mecs + 1) + j] != 1 || chosen >= 0)
          throw std::invalid_argument("each UE needs exactly one placement");
        chosen = static_cast<int>(j);
      }
      if (chosen < 0) throw std::invalid_argument("each UE needs exactly one placement");
      d.assign[i] = chosen;
    }
    return d;
  }
};

inline double distance(const UeSpec& ue, const MecSpec& mec, double min_distance) {
  const double d = std::hypot(mec.position.x - ue.position.x, mec.position.y - ue.position.y);
  return std::max(d, min_distance);
}

// Unit-mean small-scale fading draw (exponential power, i.e. Rayleigh amplitude).
inline double sample_fading(FadingMode mode, Rng& rng) {
  if (mode == FadingMode::deterministic) return 1.0;
  double l = 0.0;
  while (!(l > 0.0)) l = std::exponential_distribution<double>(1.0)(rng);
  return l;
}

inline double channel_gain(const Scenario& s, std::size_t i, std::size_t j, double fading) {
  const double r = distance(s.ues.at(i), s.mecs.at(j), s.radio.min_distance);
  return s.radio.beta0 * fading / (r * r);
}

// Fresh fading per entry; draws depend only on (scenario, epoch, seed).
inline ChannelState sample_channel_state(const Scenario& s, std::uint64_t epoch, std::uint64_t seed) {
  Rng rng{derive_seed(seed, epoch)};
  ChannelState c;
  c.n_ues = s.num_ues();
  c.n_mecs = s.num_mecs();
  c.epoch = epoch;
  c.gains.resize(c.n_ues * c.n_mecs);
  for (std::size_t i = 0; i < c.n_ues; ++i)
    for (std::size_t j = 0; j < c.n_mecs; ++j) c.gains[i * c.n_mecs + j] = channel_gain(s, i, j, sample_fading(s.fading, rng));
  return c;
}

inline double data_rate(double p_tx, double h, const RadioParams& radio) {
  return radio.bandwidth * std::log2(1.0 + p_tx * h / radio.noise);
}

inline double weighted_latency(const Scenario& s, const OffloadDecision& d, std::span<const double> freqs,
                               std::span<const double> powers, const ChannelState& channel) {
  const std::size_t n = s.num_ues();
  d.validate(n, s.num_mecs());
  if (freqs.size() != n || powers.size() != n) throw std::invalid_argument("allocation length mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& task = s.ues[i].task;
    if (!(freqs[i] > 0.0)) throw std::invalid_argument("non-positive frequency for UE " + std::to_string(i));
    double t = task.cycles / freqs[i];
    if (d[i] > 0) {
      const double rate = data_rate(powers[i], channel.gain(i, static_cast<std::size_t>(d[i] - 1)), s.radio);
      if (!(rate > 0.0)) throw std::invalid_argument("zero uplink rate for UE " + std::to_string(i));
      t += task.data_bits / rate;
    }
    total += task.weight * t;
  }
  return total;
}

// MEC layouts used by the reference experiments (50 m x 50 m area).
inline std::vector<Point> standard_mec_layout(std::size_t m) {
  switch (m) {
    case 1: return {{25, 25}};
    case 2: return {{10, 10}, {40, 40}};
    case 3: return {{10, 10}, {25, 25}, {40, 40}};
    case 4: return {{10, 10}, {10, 40}, {40, 10}, {40, 40}};
    case 5: return {{10, 10}, {10, 40}, {25, 25}, {40, 10}, {40, 40}};
    default: throw std::invalid_argument("no standard layout for " + std::to_string(m) + " MECs");
  }
}

}  // namespace ojrs
