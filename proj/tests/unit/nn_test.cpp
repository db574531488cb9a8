#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "dean/cli.hpp"
#include "dean/data.hpp"
#include "dean/error.hpp"
#include "dean/nn.hpp"
#include "dean/random.hpp"
#include "dean/surrogate.hpp"

namespace dean::nn {
namespace {

Mlp scalar_net(double w, Activation a, std::optional<double> bias = std::nullopt) {
  Mlp m;
  Layer l;
  l.weights = Matrix(1, 1, {w});
  if (bias) l.bias = std::vector<double>{*bias};
  l.activation = a;
  m.layers.push_back(l);
  return m;
}

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(r, c);
  for (auto& v : m.values()) v = n(rng);
  return m;
}

Mlp random_net(std::vector<std::size_t> sizes, BiasPolicy policy, std::uint64_t seed) {
  std::vector<Activation> acts;
  for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
    acts.push_back(k % 2 == 0 ? Activation::relu : Activation::selu);
  }
  auto net = init_mlp(sizes, policy, acts, seed);
  Rng rng(seed + 1);
  std::normal_distribution<double> n(0.0, 0.3);
  for (auto& l : net.layers) {
    if (l.bias) {
      for (auto& b : *l.bias) b = n(rng);
    }
  }
  return net;
}

TEST(Activation, Definitions) {
  EXPECT_EQ(activate(Activation::relu, -2.0), 0.0);
  EXPECT_EQ(activate(Activation::relu, 2.5), 2.5);
  EXPECT_EQ(activate(Activation::selu, 0.0), 0.0);
  EXPECT_EQ(activate(Activation::selu, 1.0), 1.0507009873554805);
  EXPECT_NEAR(activate(Activation::selu, -1.0), kSeluLambda * kSeluAlpha * (std::exp(-1.0) - 1.0),
              1e-15);
  EXPECT_LE(std::abs(activate(Activation::selu, 1e-12) - activate(Activation::selu, -1e-12)),
            1e-10);
  EXPECT_EQ(activation_derivative(Activation::relu, 0.0), 0.0);
  EXPECT_EQ(activation_derivative(Activation::selu, 2.0), kSeluLambda);
  EXPECT_EQ(parse_activation("selu"), Activation::selu);
  EXPECT_THROW(parse_activation("tanh"), DataError);
}

TEST(InitMlp, BiasPolicies) {
  const std::vector<std::size_t> sizes{2, 3, 1};
  const std::vector<Activation> acts{Activation::relu, Activation::selu};
  const auto m = init_mlp(sizes, BiasPolicy::all_but_last, acts, 1);
  ASSERT_EQ(m.layers.size(), 2u);
  ASSERT_TRUE(m.layers[0].bias.has_value());
  EXPECT_EQ(m.layers[0].bias->size(), 3u);
  EXPECT_FALSE(m.layers[1].bias.has_value());
  EXPECT_TRUE(init_mlp(sizes, BiasPolicy::all, acts, 1).layers[1].bias.has_value());
  EXPECT_FALSE(init_mlp(sizes, BiasPolicy::none, acts, 1).layers[0].bias.has_value());
}

TEST(InitMlp, MinimalNet) {
  const std::vector<std::size_t> sizes{1, 1};
  const std::vector<Activation> acts{Activation::identity};
  for (auto p : {BiasPolicy::all, BiasPolicy::none, BiasPolicy::all_but_last}) {
    const auto m = init_mlp(sizes, p, acts, 3);
    ASSERT_EQ(m.layers.size(), 1u);
    EXPECT_EQ(m.layers[0].weights.rows(), 1u);
    EXPECT_EQ(m.layers[0].weights.cols(), 1u);
  }
}

TEST(InitMlp, DeterministicGlorotBounds) {
  const std::vector<std::size_t> sizes{7, 20, 5};
  const std::vector<Activation> acts{Activation::relu, Activation::identity};
  const auto a = init_mlp(sizes, BiasPolicy::all, acts, 42);
  EXPECT_EQ(a, init_mlp(sizes, BiasPolicy::all, acts, 42));
  EXPECT_NE(a, init_mlp(sizes, BiasPolicy::all, acts, 43));
  const double limit0 = std::sqrt(6.0 / 27.0);
  for (double w : a.layers[0].weights.values()) EXPECT_LE(std::abs(w), limit0);
  for (double b : *a.layers[0].bias) EXPECT_EQ(b, 0.0);
}

TEST(InitMlp, Errors) {
  const std::vector<Activation> one{Activation::relu};
  EXPECT_THROW(init_mlp(std::vector<std::size_t>{3}, BiasPolicy::all, {}, 0), UsageError);
  EXPECT_THROW(init_mlp(std::vector<std::size_t>{3, 0}, BiasPolicy::all, one, 0), UsageError);
  EXPECT_THROW(init_mlp(std::vector<std::size_t>{3, 2, 1}, BiasPolicy::all, one, 0), UsageError);
}

TEST(Forward, Examples) {
  EXPECT_EQ(forward(scalar_net(1.0, Activation::identity), Matrix(1, 1, {3.0}))(0, 0), 3.0);
  EXPECT_EQ(forward(scalar_net(1.0, Activation::relu), Matrix(1, 1, {-2.0}))(0, 0), 0.0);
  EXPECT_EQ(forward(scalar_net(1.0, Activation::selu), Matrix(1, 1, {1.0}))(0, 0),
            1.0507009873554805);
  EXPECT_EQ(forward(scalar_net(2.0, Activation::identity, 0.5), Matrix(1, 1, {1.0}))(0, 0), 2.5);
  EXPECT_THROW(forward(scalar_net(1.0, Activation::relu), Matrix(1, 2)), DataError);
}

TEST(Forward, BatchEqualsRows) {
  const auto net = random_net({5, 9, 4, 1}, BiasPolicy::all_but_last, 7);
  const Matrix x = random_matrix(33, 5, 8);
  const Matrix all = forward(net, x);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const std::vector<std::size_t> one{i};
    EXPECT_EQ(forward(net, x.select_rows(one))(0, 0), all(i, 0));
  }
}

TEST(LossAndGradients, ExactFit) {
  const std::vector<double> target{1.0};
  const auto r = loss_and_gradients(scalar_net(1.0, Activation::identity), Matrix(1, 1, {1.0}),
                                    target, LossKind::squared);
  EXPECT_EQ(r.loss, 0.0);
  EXPECT_EQ(r.gradients.weights[0](0, 0), 0.0);
}

TEST(LossAndGradients, HandDerivative) {
  const std::vector<double> target{1.0};
  const auto r = loss_and_gradients(scalar_net(2.0, Activation::identity), Matrix(1, 1, {1.0}),
                                    target, LossKind::squared);
  EXPECT_EQ(r.loss, 1.0);
  EXPECT_EQ(r.gradients.weights[0](0, 0), 2.0);
}

TEST(LossAndGradients, AbsoluteLossUsesSign) {
  const std::vector<double> target{1.0};
  const Matrix x(2, 1, {1.0, -1.0});
  auto r = loss_and_gradients(scalar_net(3.0, Activation::identity), x, target, LossKind::absolute);
  // outputs 3 and -3: mean |f - 1| = (2 + 4) / 2, d/dw = (1 * 1 + (-1) * (-1)) / 2
  EXPECT_EQ(r.loss, 3.0);
  EXPECT_EQ(r.gradients.weights[0](0, 0), 1.0);
  r = loss_and_gradients(scalar_net(1.0, Activation::identity), Matrix(1, 1, {1.0}), target,
                         LossKind::absolute);
  EXPECT_EQ(r.gradients.weights[0](0, 0), 0.0);  // subgradient 0 at the kink
}

TEST(LossAndGradients, Errors) {
  const std::vector<double> two{1.0, 1.0};
  const std::vector<double> one{1.0};
  EXPECT_THROW(loss_and_gradients(scalar_net(1.0, Activation::relu), Matrix(1, 1), two,
                                  LossKind::squared),
               DataError);
  EXPECT_THROW(loss_and_gradients(scalar_net(1.0, Activation::relu), Matrix(0, 1), one,
                                  LossKind::squared),
               DataError);
  EXPECT_THROW(loss_and_gradients(scalar_net(1e300, Activation::identity),
                                  Matrix(1, 1, {1e300}), one, LossKind::squared),
               NumericError);
}

TEST(GradCheck, RandomSmallNet) {
  const std::vector<double> target{1.0};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto net = random_net({2, 16, 1}, BiasPolicy::all_but_last, seed);
    const auto r = grad_check(net, random_matrix(6, 2, seed + 100), target, 1e-5);
    EXPECT_LE(r.max_relative_error, 1e-4);
    EXPECT_GT(r.checked, 0u);
  }
}

TEST(GradCheck, ZeroGradientConfiguration) {
  const std::vector<double> target{1.0};
  const auto net = scalar_net(1.0, Activation::identity);
  const Matrix batch(1, 1, {1.0});
  // At an exact fit the analytic gradient vanishes and the stencil only sees
  // rounding noise.
  for (double g : loss_and_gradients(net, batch, target, LossKind::squared).gradients.flatten()) {
    EXPECT_EQ(g, 0.0);
  }
  for (double n : numeric_gradients(net, batch, target, 1e-5).values) EXPECT_LE(std::abs(n), 1e-10);
}

TEST(GradCheck, DetectsCorruptedGradient) {
  const std::vector<double> target{1.0};
  const auto net = random_net({3, 8, 1}, BiasPolicy::all, 5);
  const Matrix x = random_matrix(4, 3, 6);
  auto analytic = loss_and_gradients(net, x, target, LossKind::squared).gradients.flatten();
  const auto numeric = numeric_gradients(net, x, target, 1e-5);
  for (auto& g : analytic) g *= 2.0;
  std::vector<bool> use(analytic.size());
  for (std::size_t i = 0; i < use.size(); ++i) use[i] = !numeric.crosses_kink[i] && analytic[i] != 0.0;
  EXPECT_NEAR(max_relative_error(analytic, numeric.values, use), 0.5, 1e-4);
}

TEST(GradCheck, RegressionTargetsAndDeepNets) {
  // Per-row targets share the backward pass; compare against differences of
  // the loss evaluated through the same overload.
  const auto net = random_net({3, 6, 6, 2}, BiasPolicy::all, 9);
  const Matrix x = random_matrix(5, 3, 10);
  const Matrix t = random_matrix(5, 2, 11);
  const auto g = loss_and_gradients(net, x, t, LossKind::squared).gradients.flatten();
  auto probe = net;
  for (std::size_t p = 0; p < probe.parameter_count(); ++p) {
    const double orig = probe.parameter(p);
    probe.parameter(p) = orig + 1e-6;
    const double up = loss_and_gradients(probe, x, t, LossKind::squared).loss;
    probe.parameter(p) = orig - 1e-6;
    const double down = loss_and_gradients(probe, x, t, LossKind::squared).loss;
    probe.parameter(p) = orig;
    EXPECT_NEAR(g[p], (up - down) / 2e-6, 1e-5 * std::max(1.0, std::abs(g[p])));
  }
}

TEST(GradCheck, HarnessOverManyNets) {
  const auto s = cli::random_grad_check(20, 3, 1e-5);
  EXPECT_LE(s.max_relative_error, 1e-4);
  EXPECT_EQ(s.nets, 20u);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  auto net = random_net({2, 3, 1}, BiasPolicy::all, 1);
  const auto before = net;
  auto state = AdamState::for_model(net);
  adam_step(net, Gradients::zeros_like(net), state, 0.1);
  EXPECT_EQ(net, before);
  EXPECT_EQ(state.step, 1u);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  for (double g : {3.0, -0.25, 1e-3}) {
    auto net = scalar_net(1.0, Activation::identity);
    auto state = AdamState::for_model(net);
    auto grads = Gradients::zeros_like(net);
    grads.weights[0](0, 0) = g;
    adam_step(net, grads, state, 0.01);
    const double expected = 1.0 - 0.01 * g / (std::abs(g) + AdamState::kEpsilon);
    EXPECT_NEAR(net.layers[0].weights(0, 0), expected, 1e-15);
    EXPECT_NEAR(net.layers[0].weights(0, 0), 1.0 - 0.01 * (g > 0 ? 1.0 : -1.0), 1e-5);
  }
}

TEST(Adam, Deterministic) {
  auto a = random_net({2, 3, 1}, BiasPolicy::all, 2);
  auto b = a;
  auto sa = AdamState::for_model(a);
  auto sb = AdamState::for_model(b);
  const Matrix x = random_matrix(4, 2, 3);
  const std::vector<double> target{1.0};
  const auto g = loss_and_gradients(a, x, target, LossKind::squared).gradients;
  adam_step(a, g, sa, 0.01);
  adam_step(b, g, sb, 0.01);
  EXPECT_EQ(a, b);
}

TEST(Adam, ShapeMismatch) {
  auto net = scalar_net(1.0, Activation::identity);
  auto state = AdamState::for_model(net);
  const auto other = random_net({2, 3, 1}, BiasPolicy::all, 2);
  EXPECT_THROW(adam_step(net, Gradients::zeros_like(other), state, 0.1), DataError);
}

TEST(Train, NothingToLearnStopsAfterPatience) {
  TrainConfig cfg;
  cfg.patience = 4;
  cfg.epochs = 50;
  const std::vector<double> target{1.0};
  const auto net = scalar_net(1.0, Activation::identity);
  const auto r = train(net, Matrix(5, 1, 1.0), target, cfg);
  ASSERT_EQ(r.history.size(), 5u);
  EXPECT_EQ(r.history[0], 0.0);
  EXPECT_EQ(r.net, net);
}

TEST(Train, BatchLargerThanDataIsFullBatch) {
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 1000;
  cfg.learning_rate = 0.1;
  const std::vector<double> target{1.0};
  const Matrix x(4, 1, {1, 2, 3, 4});
  const auto net = scalar_net(0.0, Activation::identity);
  const auto r = train(net, x, target, cfg);
  ASSERT_EQ(r.history.size(), 3u);
  // Replay: one full-batch Adam step per epoch.
  auto manual = net;
  auto state = AdamState::for_model(manual);
  for (int epoch = 0; epoch < 3; ++epoch) {
    adam_step(manual, loss_and_gradients(manual, x, target, LossKind::squared).gradients, state,
              cfg.learning_rate);
  }
  // Rows arrive shuffled, so sums may differ in the last bits.
  EXPECT_NEAR(r.net.layers[0].weights(0, 0), manual.layers[0].weights(0, 0), 1e-12);
}

TEST(Train, ReducesLossOnLinearPattern) {
  const auto d = data::make_synthetic(data::SyntheticKind::linear_pattern, 500, 0, 2, 1);
  const Matrix x = data::apply_standardizer(data::fit_standardizer(d.data), d.data).values;
  const std::vector<std::size_t> hidden{32, 32, 32};
  const auto net = surrogate::make_dean_network(2, hidden, 3);
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.learning_rate = 1e-3;
  cfg.batch_size = 64;
  const std::vector<double> target{1.0};
  const double initial = evaluate_loss(net, x, target, LossKind::squared);
  const auto r = train(net, x, target, cfg);
  EXPECT_LT(r.history.back(), initial);
  // Best-weights restoration.
  const double best = *std::min_element(r.history.begin(), r.history.end());
  EXPECT_EQ(evaluate_loss(r.net, x, target, LossKind::squared), best);
  EXPECT_EQ(r.history[r.best_epoch], best);
}

TEST(Train, DeterministicInSeed) {
  const Matrix x = random_matrix(100, 3, 4);
  const auto net = random_net({3, 8, 1}, BiasPolicy::all_but_last, 4);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.batch_size = 16;
  cfg.seed = 9;
  const std::vector<double> target{1.0};
  const auto a = train(net, x, target, cfg);
  const auto b = train(net, x, target, cfg);
  EXPECT_EQ(a.net, b.net);
  EXPECT_EQ(a.history, b.history);
  cfg.seed = 10;
  EXPECT_NE(train(net, x, target, cfg).net, a.net);
}

TEST(Train, RegressionFitsALine) {
  Matrix x(64, 1), t(64, 1);
  for (std::size_t i = 0; i < 64; ++i) {
    x(i, 0) = -1.0 + 2.0 * static_cast<double>(i) / 63.0;
    t(i, 0) = 0.5 * x(i, 0) + 0.25;
  }
  auto net = scalar_net(0.0, Activation::identity, 0.0);
  TrainConfig cfg;
  cfg.epochs = 400;
  cfg.patience = 400;
  cfg.learning_rate = 0.05;
  cfg.batch_size = 16;
  const auto r = train_regression(net, x, t, cfg);
  EXPECT_NEAR(r.net.layers[0].weights(0, 0), 0.5, 1e-3);
  EXPECT_NEAR((*r.net.layers[0].bias)[0], 0.25, 1e-3);
}

TEST(Train, Errors) {
  const std::vector<double> target{1.0};
  const auto net = scalar_net(1.0, Activation::identity);
  EXPECT_THROW(train(net, Matrix(0, 1), target, TrainConfig{}), DataError);
  TrainConfig bad;
  bad.learning_rate = 0.0;
  EXPECT_THROW(train(net, Matrix(2, 1), target, bad), UsageError);
  bad = TrainConfig{};
  bad.batch_size = 0;
  EXPECT_THROW(train(net, Matrix(2, 1), target, bad), UsageError);
  bad = TrainConfig{};
  bad.epochs = 0;
  EXPECT_THROW(train(net, Matrix(2, 1), target, bad), UsageError);
}

TEST(Loss, ParseAndPrint) {
  EXPECT_EQ(parse_loss("absolute"), LossKind::absolute);
  EXPECT_EQ(to_string(LossKind::squared), "squared");
  EXPECT_THROW(parse_loss("huber"), UsageError);
}

}  // namespace
}  // namespace dean::nn
