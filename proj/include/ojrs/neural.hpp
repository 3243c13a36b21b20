#pragma once

// Small fully connected feedforward networks with hand-written
// backpropagation, plain gradient descent and Adam. Shared by the
// autoencoder and the offloading policy.

#include "ojrs/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ojrs {

enum class Activation { sigmoid, tanh, relu, linear };

inline std::string to_string(Activation a) {
  switch (a) {
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
    case Activation::linear: return "linear";
  }
  return "linear";
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "tanh") return Activation::tanh;
  if (s == "relu") return Activation::relu;
  if (s == "linear") return Activation::linear;
  throw std::invalid_argument("unknown activation: " + s);
}

struct LayerSpec {
  std::size_t in_dim = 1;
  std::size_t out_dim = 1;
  Activation activation = Activation::sigmoid;
  bool operator==(const LayerSpec&) const = default;
};

// Weights are row-major out_dim x in_dim.
struct LayerParams {
  std::vector<double> weights;
  std::vector<double> biases;
  bool operator==(const LayerParams&) const = default;
};

using Gradients = std::vector<LayerParams>;

class Network {
 public:
  Network() = default;

  // Zero-initialized parameters.
  explicit Network(std::vector<LayerSpec> specs) : specs_(std::move(specs)) {
    if (specs_.empty()) throw std::invalid_argument("network needs at least one layer");
    for (std::size_t l = 0; l < specs_.size(); ++l) {
      const auto& s = specs_[l];
      if (s.in_dim == 0 || s.out_dim == 0) throw std::invalid_argument("layer dimensions must be >= 1");
      if (l > 0 && specs_[l - 1].out_dim != s.in_dim) throw std::invalid_argument("layer dimensions do not chain");
      params_.push_back({std::vector<double>(s.in_dim * s.out_dim, 0.0), std::vector<double>(s.out_dim, 0.0)});
    }
  }

  // Glorot-uniform weights, zero biases.
  Network(std::vector<LayerSpec> specs, Rng& rng) : Network(std::move(specs)) {
    for (std::size_t l = 0; l < specs_.size(); ++l) {
      const double limit = std::sqrt(6.0 / static_cast<double>(specs_[l].in_dim + specs_[l].out_dim));
      std::uniform_real_distribution<double> dist(-limit, limit);
      for (auto& w : params_[l].weights) w = dist(rng);
    }
  }

  static std::vector<LayerSpec> chain(std::span<const std::size_t> dims, Activation hidden, Activation output) {
    if (dims.size() < 2) throw std::invalid_argument("need at least input and output dimensions");
    std::vector<LayerSpec> specs;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l)
      specs.push_back({dims[l], dims[l + 1], l + 2 == dims.size() ? output : hidden});
    return specs;
  }

  const std::vector<LayerSpec>& specs() const noexcept { return specs_; }
  std::vector<LayerParams>& params() noexcept { return params_; }
  const std::vector<LayerParams>& params() const noexcept { return params_; }
  std::size_t num_layers() const noexcept { return specs_.size(); }
  std::size_t input_dim() const { return specs_.front().in_dim; }
  std::size_t output_dim() const { return specs_.back().out_dim; }

  std::size_t num_parameters() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.weights.size() + p.biases.size();
    return n;
  }

  // Copy of layers [first, last).
  Network slice(std::size_t first, std::size_t last) const {
    if (first >= last || last > specs_.size()) throw std::out_of_range("invalid layer slice");
    Network out;
    out.specs_.assign(specs_.begin() + static_cast<std::ptrdiff_t>(first), specs_.begin() + static_cast<std::ptrdiff_t>(last));
    out.params_.assign(params_.begin() + static_cast<std::ptrdiff_t>(first), params_.begin() + static_cast<std::ptrdiff_t>(last));
    return out;
  }

  bool operator==(const Network&) const = default;

 private:
  std::vector<LayerSpec> specs_;
  std::vector<LayerParams> params_;
};

namespace detail {

inline double activate(Activation a, double z) {
  switch (a) {
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-z));
    case Activation::tanh: return std::tanh(z);
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::linear: return z;
  }
  return z;
}

// Derivative expressed through the activation output y.
inline double activation_slope(Activation a, double y) {
  switch (a) {
    case Activation::sigmoid: return y * (1.0 - y);
    case Activation::tanh: return 1.0 - y * y;
    case Activation::relu: return y > 0.0 ? 1.0 : 0.0;
    case Activation::linear: return 1.0;
  }
  return 1.0;
}

inline void dense(const LayerSpec& s, const LayerParams& p, std::span<const double> in, std::span<double> out) {
  for (std::size_t o = 0; o < s.out_dim; ++o) {
    const double* w = p.weights.data() + o * s.in_dim;
    double z = p.biases[o];
    for (std::size_t k = 0; k < s.in_dim; ++k) z += w[k] * in[k];
    out[o] = activate(s.activation, z);
  }
}

}  // namespace detail

// activations[0] is the input, activations[l + 1] the output of layer l.
struct ForwardCache {
  std::vector<std::vector<double>> activations;
  std::span<const double> output() const { return activations.back(); }
};

inline ForwardCache forward(const Network& net, std::span<const double> x) {
  if (x.size() != net.input_dim()) throw std::invalid_argument("input dimension mismatch");
  ForwardCache cache;
  cache.activations.reserve(net.num_layers() + 1);
  cache.activations.emplace_back(x.begin(), x.end());
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    std::vector<double> out(net.specs()[l].out_dim);
    detail::dense(net.specs()[l], net.params()[l], cache.activations.back(), out);
    cache.activations.push_back(std::move(out));
  }
  return cache;
}

inline std::vector<double> predict(const Network& net, std::span<const double> x) {
  return std::move(forward(net, x).activations.back());
}

inline Gradients zero_gradients(const Network& net) {
  Gradients g;
  for (const auto& p : net.params())
    g.push_back({std::vector<double>(p.weights.size(), 0.0), std::vector<double>(p.biases.size(), 0.0)});
  return g;
}

// Accumulates d(loss)/d(theta) into acc, given d(loss)/d(output).
inline void backward(const Network& net, const ForwardCache& cache, std::span<const double> grad_output,
                     Gradients& acc, std::vector<double>* grad_input = nullptr) {
  if (grad_output.size() != net.output_dim()) throw std::invalid_argument("output gradient dimension mismatch");
  if (cache.activations.size() != net.num_layers() + 1) throw std::invalid_argument("cache does not match network");
  std::vector<double> upstream(grad_output.begin(), grad_output.end());
  for (std::size_t l = net.num_layers(); l-- > 0;) {
    const auto& s = net.specs()[l];
    const auto& in = cache.activations[l];
    const auto& out = cache.activations[l + 1];
    auto& g = acc[l];
    std::vector<double> delta(s.out_dim);
    for (std::size_t o = 0; o < s.out_dim; ++o) delta[o] = upstream[o] * detail::activation_slope(s.activation, out[o]);
    for (std::size_t o = 0; o < s.out_dim; ++o) {
      if (delta[o] == 0.0) continue;
      double* gw = g.weights.data() + o * s.in_dim;
      for (std::size_t k = 0; k < s.in_dim; ++k) gw[k] += delta[o] * in[k];
      g.biases[o] += delta[o];
    }
    if (l == 0 && grad_input == nullptr) break;
    std::vector<double> next(s.in_dim, 0.0);
    const auto& w = net.params()[l].weights;
    for (std::size_t o = 0; o < s.out_dim; ++o) {
      if (delta[o] == 0.0) continue;
      const double* row = w.data() + o * s.in_dim;
      for (std::size_t k = 0; k < s.in_dim; ++k) next[k] += row[k] * delta[o];
    }
    upstream = std::move(next);
  }
  if (grad_input != nullptr) *grad_input = std::move(upstream);
}

inline Gradients backward(const Network& net, const ForwardCache& cache, std::span<const double> grad_output) {
  auto g = zero_gradients(net);
  backward(net, cache, grad_output, g);
  return g;
}

inline double l2_norm_sq(const Network& net) {
  double s = 0.0;
  for (const auto& p : net.params()) {
    for (double w : p.weights) s += w * w;
    for (double b : p.biases) s += b * b;
  }
  return s;
}

// g += coeff * theta, the gradient of (coeff / 2) * ||theta||^2.
inline void add_l2_gradient(const Network& net, double coeff, Gradients& g) {
  for (std::size_t l = 0; l < g.size(); ++l) {
    const auto& p = net.params()[l];
    for (std::size_t k = 0; k < p.weights.size(); ++k) g[l].weights[k] += coeff * p.weights[k];
    for (std::size_t k = 0; k < p.biases.size(); ++k) g[l].biases[k] += coeff * p.biases[k];
  }
}

inline void scale(Gradients& g, double c) {
  for (auto& p : g) {
    for (auto& w : p.weights) w *= c;
    for (auto& b : p.biases) b *= c;
  }
}

inline void sgd_step(Network& net, const Gradients& g, double learning_rate) {
  for (std::size_t l = 0; l < g.size(); ++l) {
    auto& p = net.params()[l];
    for (std::size_t k = 0; k < p.weights.size(); ++k) p.weights[k] -= learning_rate * g[l].weights[k];
    for (std::size_t k = 0; k < p.biases.size(); ++k) p.biases[k] -= learning_rate * g[l].biases[k];
  }
}

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam() = default;
  Adam(const Network& net, AdamConfig cfg) : cfg_(cfg), m_(zero_gradients(net)), v_(zero_gradients(net)) {}

  const AdamConfig& config() const noexcept { return cfg_; }
  std::uint64_t steps() const noexcept { return t_; }

  void step(Network& net, const Gradients& g) {
    if (g.size() != m_.size()) throw std::invalid_argument("gradient shape does not match optimizer state");
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    auto update = [&](std::vector<double>& theta, const std::vector<double>& grad, std::vector<double>& m,
                      std::vector<double>& v) {
      for (std::size_t k = 0; k < theta.size(); ++k) {
        m[k] = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * grad[k];
        v[k] = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * grad[k] * grad[k];
        theta[k] -= cfg_.learning_rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + cfg_.epsilon);
      }
    };
    for (std::size_t l = 0; l < g.size(); ++l) {
      auto& p = net.params()[l];
      update(p.weights, g[l].weights, m_[l].weights, v_[l].weights);
      update(p.biases, g[l].biases, m_[l].biases, v_[l].biases);
    }
  }

 private:
  AdamConfig cfg_;
  Gradients m_;
  Gradients v_;
  std::uint64_t t_ = 0;
};

// ---------------------------------------------------------------------------
// Checkpoints

inline nlohmann::json to_json(const Network& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const auto& s = net.specs()[l];
    layers.push_back({{"in", s.in_dim},
                      {"out", s.out_dim},
                      {"activation", to_string(s.activation)},
                      {"weights", net.params()[l].weights},
                      {"biases", net.params()[l].biases}});
  }
  return layers;
}

inline Network network_from_json(const nlohmann::json& layers) {
  std::vector<LayerSpec> specs;
  for (const auto& j : layers)
    specs.push_back({j.at("in").get<std::size_t>(), j.at("out").get<std::size_t>(),
                     activation_from_string(j.at("activation").get<std::string>())});
  Network net(specs);
  for (std::size_t l = 0; l < specs.size(); ++l) {
    auto w = layers[l].at("weights").get<std::vector<double>>();
    auto b = layers[l].at("biases").get<std::vector<double>>();
    if (w.size() != net.params()[l].weights.size() || b.size() != net.params()[l].biases.size())
      throw std::invalid_argument("checkpoint parameter count mismatch in layer " + std::to_string(l));
    net.params()[l].weights = std::move(w);
    net.params()[l].biases = std::move(b);
  }
  return net;
}

struct Checkpoint {
  Network net;
  std::uint64_t seed = 0;
  std::uint64_t epoch = 0;
  nlohmann::json extra = nlohmann::json::object();
};

inline std::string dump_checkpoint(const Checkpoint& c) {
  nlohmann::json j = {{"format", "ojrs-network/1"},
                      {"seed", c.seed},
                      {"epoch", c.epoch},
                      {"layers", to_json(c.net)},
                      {"extra", c.extra}};
  return j.dump(1) + "\n";
}

inline Checkpoint parse_checkpoint(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  if (j.value("format", "") != "ojrs-network/1") throw std::invalid_argument("not a network checkpoint");
  Checkpoint c;
  c.seed = j.at("seed").get<std::uint64_t>();
  c.epoch = j.at("epoch").get<std::uint64_t>();
  c.net = network_from_json(j.at("layers"));
  c.extra = j.value("extra", nlohmann::json::object());
  return c;
}

inline void save_checkpoint(const std::string& path, const Checkpoint& c) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << dump_checkpoint(c);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_checkpoint(ss.str());
}

}  // namespace ojrs
