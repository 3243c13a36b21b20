#include "ojrs/neural.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace ojrs;

namespace {

std::vector<double> random_vector(std::size_t n, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

// 0.5 * sum (y - target)^2, gradient y - target.
double half_sse(const Network& net, const std::vector<double>& x, const std::vector<double>& target) {
  const auto y = predict(net, x);
  double s = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) s += 0.5 * (y[k] - target[k]) * (y[k] - target[k]);
  return s;
}

}  // namespace

TEST(Forward, IdentityLinearLayerPassesInput) {
  Network net(std::vector<LayerSpec>{{3, 3, Activation::linear}});
  for (std::size_t k = 0; k < 3; ++k) net.params()[0].weights[k * 3 + k] = 1.0;
  const std::vector<double> x{0.3, -2.0, 7.5};
  EXPECT_EQ(predict(net, x), x);
}

TEST(Forward, ZeroSigmoidLayerGivesHalf) {
  Network net(std::vector<LayerSpec>{{4, 5, Activation::sigmoid}});
  for (double y : predict(net, std::vector<double>{1, 2, 3, 4})) EXPECT_EQ(y, 0.5);
}

TEST(Forward, EncoderWidths) {
  Rng rng{1};
  const std::vector<std::size_t> dims{60, 45, 30};
  Network net(Network::chain(dims, Activation::sigmoid, Activation::sigmoid), rng);
  EXPECT_EQ(predict(net, std::vector<double>(60, 0.5)).size(), 30u);
}

TEST(Forward, DimensionMismatchThrows) {
  Network net(std::vector<LayerSpec>{{3, 2, Activation::relu}});
  EXPECT_THROW(forward(net, std::vector<double>(4)), std::invalid_argument);
  EXPECT_THROW(Network(std::vector<LayerSpec>{{3, 2, Activation::relu}, {3, 1, Activation::relu}}),
               std::invalid_argument);
}

TEST(Forward, FiniteOutputsForLargeInputs) {
  Rng rng{2};
  const std::vector<std::size_t> dims{5, 8, 3};
  for (auto a : {Activation::sigmoid, Activation::tanh, Activation::relu, Activation::linear}) {
    Network net(Network::chain(dims, a, a), rng);
    for (double y : predict(net, std::vector<double>{1e3, -1e3, 5e2, 0, 1e4})) EXPECT_TRUE(std::isfinite(y));
  }
}

TEST(Backward, MatchesCentralDifferencesForEveryActivation) {
  Rng rng{3};
  for (auto a : {Activation::sigmoid, Activation::tanh, Activation::relu, Activation::linear}) {
    for (std::size_t depth = 2; depth <= 4; ++depth) {
      std::vector<std::size_t> dims{4};
      for (std::size_t l = 0; l < depth; ++l) dims.push_back(3 + uniform_index(rng, 3));
      Network net(Network::chain(dims, a, a), rng);
      for (auto& p : net.params())
        for (auto& b : p.biases) b = 0.1 * (uniform01(rng) - 0.5);
      const auto x = random_vector(4, rng);
      const auto target = random_vector(dims.back(), rng);
      const auto cache = forward(net, x);
      std::vector<double> up(dims.back());
      for (std::size_t k = 0; k < up.size(); ++k) up[k] = cache.output()[k] - target[k];
      const auto analytic = backward(net, cache, up);
      const auto numeric =
          oracle::numeric_gradient(net, [&](const Network& n) { return half_sse(n, x, target); });
      EXPECT_LT(oracle::max_relative_gap(analytic, numeric), 1e-4) << to_string(a) << " depth " << depth;
    }
  }
}

TEST(Backward, InputGradientMatchesCentralDifferences) {
  Rng rng{4};
  const std::vector<std::size_t> dims{3, 4, 2};
  Network net(Network::chain(dims, Activation::tanh, Activation::sigmoid), rng);
  auto x = random_vector(3, rng);
  const std::vector<double> target{0.2, 0.9};
  auto g = zero_gradients(net);
  std::vector<double> gin;
  const auto cache = forward(net, x);
  std::vector<double> up{cache.output()[0] - target[0], cache.output()[1] - target[1]};
  backward(net, cache, up, g, &gin);
  for (std::size_t k = 0; k < 3; ++k) {
    const double keep = x[k];
    x[k] = keep + 1e-6;
    const double hi = half_sse(net, x, target);
    x[k] = keep - 1e-6;
    const double lo = half_sse(net, x, target);
    x[k] = keep;
    EXPECT_NEAR(gin[k], (hi - lo) / 2e-6, 1e-6);
  }
}

TEST(Backward, ZeroUpstreamGivesZeroGradients) {
  Rng rng{5};
  const std::vector<std::size_t> dims{3, 4, 2};
  Network net(Network::chain(dims, Activation::sigmoid, Activation::sigmoid), rng);
  const auto g = backward(net, forward(net, random_vector(3, rng)), std::vector<double>{0, 0});
  EXPECT_EQ(g, zero_gradients(net));
}

TEST(Backward, LinearWeightGradientIsOuterProduct) {
  Rng rng{6};
  Network net(std::vector<LayerSpec>{{3, 2, Activation::linear}}, rng);
  const std::vector<double> x{1.0, -2.0, 0.5}, up{0.3, -0.7};
  const auto g = backward(net, forward(net, x), up);
  for (std::size_t o = 0; o < 2; ++o)
    for (std::size_t k = 0; k < 3; ++k) EXPECT_DOUBLE_EQ(g[0].weights[o * 3 + k], up[o] * x[k]);
  EXPECT_DOUBLE_EQ(g[0].biases[1], -0.7);
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  Rng rng{7};
  const std::vector<std::size_t> dims{3, 4, 2};
  Network net(Network::chain(dims, Activation::relu, Activation::sigmoid), rng);
  const Network before = net;
  Adam opt(net, {});
  for (int k = 0; k < 5; ++k) opt.step(net, zero_gradients(net));
  EXPECT_EQ(net, before);
  EXPECT_EQ(opt.steps(), 5u);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Network net(std::vector<LayerSpec>{{2, 1, Activation::linear}});
  Adam opt(net, {.learning_rate = 0.01});
  auto g = zero_gradients(net);
  g[0].weights = {3.0, -0.5};
  g[0].biases = {1e-3};
  opt.step(net, g);
  EXPECT_NEAR(net.params()[0].weights[0], -0.01, 1e-9);
  EXPECT_NEAR(net.params()[0].weights[1], 0.01, 1e-9);
  EXPECT_NEAR(net.params()[0].biases[0], -0.01, 1e-7);
}

TEST(Adam, TinyRegressionLossDecreasesEveryStep) {
  Rng rng{8};
  const std::vector<std::size_t> dims{2, 6, 1};
  Network net(Network::chain(dims, Activation::tanh, Activation::linear), rng);
  Adam opt(net, {});
  const std::vector<std::vector<double>> xs{{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  const std::vector<double> ys{0.1, 0.7, 0.4, 1.0};
  auto loss_and_grad = [&](Gradients* g) {
    double total = 0.0;
    for (std::size_t s = 0; s < xs.size(); ++s) {
      const auto cache = forward(net, xs[s]);
      const double e = cache.output()[0] - ys[s];
      total += 0.5 * e * e / 4.0;
      if (g) backward(net, cache, std::vector<double>{e / 4.0}, *g);
    }
    return total;
  };
  double prev = loss_and_grad(nullptr);
  for (int step = 0; step < 10; ++step) {
    auto g = zero_gradients(net);
    loss_and_grad(&g);
    opt.step(net, g);
    const double now = loss_and_grad(nullptr);
    EXPECT_LT(now, prev) << "step " << step;
    prev = now;
  }
}

TEST(Adam, ShapeMismatchThrows) {
  Network a(std::vector<LayerSpec>{{2, 1, Activation::linear}});
  Network b(std::vector<LayerSpec>{{2, 2, Activation::linear}, {2, 1, Activation::linear}});
  Adam opt(a, {});
  EXPECT_THROW(opt.step(b, zero_gradients(b)), std::invalid_argument);
}

TEST(L2, Basics) {
  Network net(std::vector<LayerSpec>{{2, 2, Activation::linear}});
  EXPECT_EQ(l2_norm_sq(net), 0.0);
  net.params()[0].weights[1] = 3.0;
  EXPECT_EQ(l2_norm_sq(net), 9.0);
  Rng rng{9};
  const std::vector<std::size_t> dims{3, 5, 2};
  Network r(Network::chain(dims, Activation::relu, Activation::linear), rng);
  const double base = l2_norm_sq(r);
  for (auto& p : r.params()) {
    for (auto& w : p.weights) w *= 1.7;
    for (auto& b : p.biases) b *= 1.7;
  }
  EXPECT_NEAR(l2_norm_sq(r), 1.7 * 1.7 * base, 1e-12 * base);
}

TEST(L2, GradientMatchesFiniteDifference) {
  Rng rng{10};
  const std::vector<std::size_t> dims{3, 2};
  Network net(Network::chain(dims, Activation::relu, Activation::linear), rng);
  auto g = zero_gradients(net);
  add_l2_gradient(net, 0.3, g);
  const auto numeric = oracle::numeric_gradient(net, [](const Network& n) { return 0.15 * l2_norm_sq(n); });
  EXPECT_LT(oracle::max_relative_gap(g, numeric), 1e-6);
}

TEST(Determinism, SameSeedSameTrajectory) {
  auto run = [] {
    Rng rng{11};
    const std::vector<std::size_t> dims{4, 6, 2};
    Network net(Network::chain(dims, Activation::sigmoid, Activation::sigmoid), rng);
    Adam opt(net, {});
    for (int k = 0; k < 20; ++k) {
      const auto x = random_vector(4, rng);
      const auto cache = forward(net, x);
      opt.step(net, backward(net, cache, std::vector<double>{cache.output()[0] - 1.0, cache.output()[1]}));
    }
    return net;
  };
  EXPECT_EQ(run(), run());
}

TEST(Slice, KeepsLayersAndParameters) {
  Rng rng{12};
  const std::vector<std::size_t> dims{6, 4, 3, 4, 6};
  Network net(Network::chain(dims, Activation::sigmoid, Activation::sigmoid), rng);
  const auto enc = net.slice(0, 2);
  EXPECT_EQ(enc.num_layers(), 2u);
  EXPECT_EQ(enc.output_dim(), 3u);
  EXPECT_EQ(enc.params()[1], net.params()[1]);
  EXPECT_THROW(net.slice(2, 2), std::out_of_range);
}

TEST(CheckpointIo, ByteStableRoundTrip) {
  Rng rng{13};
  const std::vector<std::size_t> dims{5, 7, 3};
  Checkpoint c;
  c.net = Network(Network::chain(dims, Activation::relu, Activation::sigmoid), rng);
  c.net.params()[0].biases[2] = 1.0 / 3.0;
  c.seed = 99;
  c.epoch = 1234;
  c.extra = {{"kind", "policy"}};
  const auto text = dump_checkpoint(c);
  const auto back = parse_checkpoint(text);
  EXPECT_EQ(back.net, c.net);
  EXPECT_EQ(back.seed, 99u);
  EXPECT_EQ(back.epoch, 1234u);
  EXPECT_EQ(dump_checkpoint(back), text);
}

TEST(CheckpointIo, FileRoundTrip) {
  Rng rng{14};
  const std::vector<std::size_t> dims{2, 2};
  Checkpoint c;
  c.net = Network(Network::chain(dims, Activation::tanh, Activation::tanh), rng);
  const auto path = ::testing::TempDir() + "ojrs_ckpt.json";
  save_checkpoint(path, c);
  EXPECT_EQ(load_checkpoint(path).net, c.net);
  EXPECT_THROW(load_checkpoint(path + ".missing"), std::runtime_error);
}

TEST(CheckpointIo, RejectsForeignDocuments) {
  EXPECT_ANY_THROW(parse_checkpoint("{\"format\": \"something-else\"}"));
  EXPECT_ANY_THROW(parse_checkpoint("not json"));
}

TEST(ActivationNames, RoundTrip) {
  for (auto a : {Activation::sigmoid, Activation::tanh, Activation::relu, Activation::linear})
    EXPECT_EQ(activation_from_string(to_string(a)), a);
  EXPECT_THROW(activation_from_string("gelu"), std::invalid_argument);
}
