#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "maxk/error.hpp"
#include "maxk/gnn.hpp"
#include "support/gradcheck.hpp"
#include "support/oracle.hpp"

using namespace maxk;

namespace {

// Random graph with every row degree <= 32, so one edge group per row.
CsrGraph small_degree_graph(std::size_t n, std::mt19937_64& rng) {
  return normalize(add_self_loops(oracle::random_degree_graph(n, 20, rng)), Normalization::mean);
}

template <typename T>
MaxkGnnLayer<T> seeded_layer(std::size_t in, std::size_t out, Activation act, std::size_t k, std::uint64_t seed) {
  MaxkGnnLayer<T> layer(in, out, act, k);
  std::mt19937_64 rng(seed);
  layer.linear().init(rng);
  std::uniform_real_distribution<double> b(-0.3, 0.3);
  for (T& v : layer.linear().bias) v = static_cast<T>(b(rng));
  return layer;
}

LabelSet single_labels(std::vector<std::uint32_t> classes, std::size_t num_classes) {
  LabelSet l;
  l.num_classes = num_classes;
  l.classes = std::move(classes);
  return l;
}

}  // namespace

TEST(MaxkLayer, FullWidthOnIdentityIsLinear) {
  std::mt19937_64 rng(1);
  const CsrGraph eye = identity_graph(10);
  auto layer = seeded_layer<float>(6, 8, Activation::maxk, 8, 2);
  const auto x = oracle::random_matrix<float>(10, 6, rng);
  EXPECT_EQ(layer.forward(eye, x), layer.linear().forward(x));
}

TEST(MaxkLayer, MatchesDensePipeline) {
  std::mt19937_64 rng(3);
  const CsrGraph g = normalize(add_self_loops(oracle::random_graph(30, 0.2, rng)), Normalization::symmetric);
  auto layer = seeded_layer<float>(7, 16, Activation::maxk, 4, 4);
  const auto x = oracle::random_matrix<float>(30, 7, rng);
  const Matrix<float> y = layer.linear().forward(x);
  const auto want = oracle::matmul(oracle::dense_adjacency(g), oracle::maxk_dense(y, 4));
  EXPECT_LE(oracle::max_abs_diff(layer.forward(g, x), want), 1e-5);
  ASSERT_TRUE(layer.cached_pattern().has_value());
  EXPECT_EQ(layer.last_pivots().rows, 30u);
}

TEST(MaxkLayer, ZeroInputZeroBiasGivesZero) {
  std::mt19937_64 rng(5);
  const CsrGraph g = oracle::random_graph(12, 0.3, rng);
  MaxkGnnLayer<float> layer(4, 8, Activation::maxk, 2);
  layer.linear().init(rng);
  const Matrix<float> y = layer.forward(g, Matrix<float>(12, 4));
  for (float v : y.flat()) EXPECT_EQ(v, 0.0f);
}

TEST(MaxkLayer, ZeroUpstreamGivesZeroGradients) {
  std::mt19937_64 rng(6);
  const CsrGraph g = oracle::random_graph(12, 0.3, rng);
  auto layer = seeded_layer<double>(4, 8, Activation::maxk, 2, 7);
  const auto x = oracle::random_matrix<double>(12, 4, rng);
  layer.linear().zero_grad();
  layer.forward(g, x);
  const Matrix<double> dx = layer.backward(g, Matrix<double>(12, 8));
  for (double v : dx.flat()) EXPECT_EQ(v, 0.0);
  for (double v : layer.linear().grad_weight.flat()) EXPECT_EQ(v, 0.0);
  for (double v : layer.linear().grad_bias) EXPECT_EQ(v, 0.0);
}

TEST(MaxkLayer, FullWidthOnIdentityHasLinearGradients) {
  std::mt19937_64 rng(8);
  const CsrGraph eye = identity_graph(9);
  auto layer = seeded_layer<double>(5, 6, Activation::maxk, 6, 9);
  LinearLayer<double> plain = layer.linear();
  const auto x = oracle::random_matrix<double>(9, 5, rng);
  const auto up = oracle::random_matrix<double>(9, 6, rng);
  layer.linear().zero_grad();
  plain.zero_grad();
  layer.forward(eye, x);
  EXPECT_EQ(layer.backward(eye, up), plain.backward(x, up));
  EXPECT_EQ(layer.linear().grad_weight, plain.grad_weight);
  EXPECT_EQ(layer.linear().grad_bias, plain.grad_bias);
}

TEST(MaxkLayer, FullWidthEqualsNoNonlinearity) {
  std::mt19937_64 rng(10);
  const CsrGraph g = small_degree_graph(40, rng);
  auto mk = seeded_layer<float>(6, 12, Activation::maxk, 12, 11);
  auto id = seeded_layer<float>(6, 12, Activation::identity, 12, 11);
  const auto x = oracle::random_matrix<float>(40, 6, rng);
  const auto up = oracle::random_matrix<float>(40, 12, rng);
  EXPECT_EQ(mk.forward(g, x), id.forward(g, x));
  mk.linear().zero_grad();
  id.linear().zero_grad();
  EXPECT_EQ(mk.backward(g, up), id.backward(g, up));
  EXPECT_EQ(mk.linear().grad_weight, id.linear().grad_weight);
  EXPECT_EQ(mk.linear().grad_bias, id.linear().grad_bias);
}

TEST(MaxkLayer, Errors) {
  EXPECT_THROW(MaxkGnnLayer<float>(4, 8, Activation::maxk, 9), DimensionError);
  EXPECT_THROW(MaxkGnnLayer<float>(4, 8, Activation::maxk, 0), DimensionError);
  MaxkGnnLayer<float> layer(4, 8, Activation::maxk, 2);
  const CsrGraph eye = identity_graph(3);
  EXPECT_THROW(layer.backward(eye, Matrix<float>(3, 8)), StateError);
  EXPECT_THROW(layer.forward(eye, Matrix<float>(3, 5)), DimensionError);
  EXPECT_THROW(layer.forward(eye, Matrix<float>(4, 4)), DimensionError);
}

TEST(GradientCheck, MaxkLayer) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto r = oracle::gradient_check_layer(seed, Activation::maxk);
    EXPECT_GT(r.min_selection_gap, 0.02);
    EXPECT_EQ(r.checked, 5u * 8u + 8u + 12u * 5u);
    EXPECT_LE(r.max_rel_error, 1e-3) << "seed " << seed;
  }
}

TEST(GradientCheck, ReluAndIdentityLayers) {
  EXPECT_LE(oracle::gradient_check_layer(4, Activation::relu).max_rel_error, 1e-3);
  EXPECT_LE(oracle::gradient_check_layer(5, Activation::identity).max_rel_error, 1e-3);
}

TEST(GradientCheck, TwoLayerModelWithLoss) {
  std::mt19937_64 rng(12);
  const CsrGraph g = normalize(add_self_loops(oracle::random_graph(12, 0.3, rng)), Normalization::symmetric);
  ModelConfig cfg;
  cfg.in_features = 4;
  cfg.hidden = 8;
  cfg.out_features = 3;
  cfg.k = 3;
  GnnModel<double> model(cfg, 13);
  const auto x = oracle::random_matrix<double>(12, 4, rng);
  const LabelSet labels = single_labels({0, 1, 2, 0, 1, 2, 0, 1, 2, 0, 1, 2}, 3);
  const std::vector<std::uint8_t> mask(12, 1);
  const auto loss = [&] { return compute_loss(LossKind::softmax_ce, model.forward(g, x), labels, mask).loss; };

  model.zero_grad();
  const auto res = compute_loss(LossKind::softmax_ce, model.forward(g, x), labels, mask);
  model.backward(g, res.grad);
  const auto first_pattern = *model.layers()[0].cached_pattern();

  double worst = 0.0;
  for (auto& layer : model.layers()) {
    auto& w = layer.linear().weight;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double saved = w.flat()[i];
      w.flat()[i] = saved + 1e-5;
      const double plus = loss();
      const bool same = model.layers()[0].cached_pattern()->same_pattern(first_pattern);
      w.flat()[i] = saved - 1e-5;
      const double minus = loss();
      w.flat()[i] = saved;
      if (!same || !model.layers()[0].cached_pattern()->same_pattern(first_pattern)) continue;
      worst = std::max(worst, oracle::relative_error(layer.linear().grad_weight.flat()[i], (plus - minus) / 2e-5));
    }
  }
  EXPECT_LE(worst, 1e-3);
}

TEST(Model, LastLayerIsLinear) {
  ModelConfig cfg;
  cfg.layers = 3;
  GnnModel<float> model(cfg, 1);
  ASSERT_EQ(model.layers().size(), 3u);
  EXPECT_EQ(model.layers()[0].activation(), Activation::maxk);
  EXPECT_EQ(model.layers()[1].activation(), Activation::maxk);
  EXPECT_EQ(model.layers()[2].activation(), Activation::identity);
  EXPECT_EQ(model.layers()[2].linear().out_features(), cfg.out_features);
  cfg.layers = 0;
  EXPECT_THROW(GnnModel<float>(cfg, 1), ParameterError);
}

TEST(Model, ParallelModeCloseToDeterministic) {
  std::mt19937_64 rng(14);
  const CsrGraph g = oracle::random_graph(50, 0.2, rng);
  ModelConfig cfg;
  cfg.in_features = 8;
  GnnModel<float> a(cfg, 3), b(cfg, 3);
  ExecOptions par;
  par.mode = ExecMode::parallel;
  par.threads = 4;
  b.set_exec(par);
  const auto x = oracle::random_matrix<float>(50, 8, rng);
  const Matrix<float> ya = a.forward(g, x), yb = b.forward(g, x);
  for (std::size_t i = 0; i < ya.size(); ++i) EXPECT_NEAR(ya.flat()[i], yb.flat()[i], 1e-4);
}

TEST(Loss, SoftmaxCrossEntropyByHand) {
  const Matrix<double> z(2, 3, {1.0, 2.0, 3.0, 0.0, 0.0, 0.0});
  const LabelSet l = single_labels({2, 0}, 3);
  const std::vector<std::uint8_t> mask{1, 0};
  const auto r = compute_loss(LossKind::softmax_ce, z, l, mask);
  const double lse = std::log(std::exp(1.0) + std::exp(2.0) + std::exp(3.0));
  EXPECT_NEAR(r.loss, lse - 3.0, 1e-12);
  EXPECT_NEAR(r.grad(0, 2), std::exp(3.0 - lse) - 1.0, 1e-12);
  EXPECT_EQ(r.grad(1, 0), 0.0);
}

TEST(Loss, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(15);
  auto z = oracle::random_matrix<double>(6, 4, rng);
  const LabelSet single = single_labels({0, 3, 1, 2, 2, 1}, 4);
  LabelSet multi;
  multi.num_classes = 4;
  multi.multi_label = true;
  multi.multi_hot = Matrix<float>(6, 4);
  for (std::size_t i = 0; i < 24; ++i) multi.multi_hot.flat()[i] = static_cast<float>(i % 3 == 0);
  const std::vector<std::uint8_t> mask{1, 1, 0, 1, 1, 1};
  for (auto [kind, labels] : {std::pair{LossKind::softmax_ce, &single}, std::pair{LossKind::bce, static_cast<const LabelSet*>(&multi)}}) {
    const auto grad = compute_loss(kind, z, *labels, mask).grad;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double saved = z.flat()[i];
      z.flat()[i] = saved + 1e-6;
      const double plus = compute_loss(kind, z, *labels, mask).loss;
      z.flat()[i] = saved - 1e-6;
      const double minus = compute_loss(kind, z, *labels, mask).loss;
      z.flat()[i] = saved;
      EXPECT_NEAR(grad.flat()[i], (plus - minus) / 2e-6, 1e-7);
    }
  }
}

TEST(Loss, KindMustMatchLabels) {
  const LabelSet l = single_labels({0}, 2);
  const std::vector<std::uint8_t> mask{1};
  EXPECT_THROW(compute_loss(LossKind::bce, Matrix<float>(1, 2), l, mask), ParameterError);
  EXPECT_THROW(compute_loss(LossKind::softmax_ce, Matrix<float>(1, 3), l, mask), DimensionError);
  EXPECT_EQ(parse_loss("bce"), LossKind::bce);
  EXPECT_THROW(parse_loss("mse"), ParameterError);
}

TEST(Accuracy, ArgmaxAndSign) {
  const Matrix<float> z(3, 2, {1, 0, 0, 1, 5, -5});
  const std::vector<std::uint8_t> all{1, 1, 1};
  EXPECT_DOUBLE_EQ(accuracy(z, single_labels({0, 0, 0}, 2), all), 2.0 / 3.0);
  LabelSet multi;
  multi.num_classes = 2;
  multi.multi_label = true;
  multi.multi_hot = Matrix<float>(3, 2, {1, 0, 0, 1, 1, 1});
  EXPECT_DOUBLE_EQ(accuracy(z, multi, all), 5.0 / 6.0);
}

TEST(Sgd, ZeroLearningRateKeepsParameters) {
  LinearLayer<float> layer(3, 2);
  std::mt19937_64 rng(16);
  layer.init(rng);
  const Matrix<float> before = layer.weight;
  layer.grad_weight.fill(1.0f);
  Sgd<float> opt(0.0, 0.9);
  opt.step(layer, 0);
  EXPECT_EQ(layer.weight, before);
}

TEST(Sgd, MomentumAccumulates) {
  LinearLayer<double> layer(1, 1);
  layer.weight(0, 0) = 1.0;
  layer.grad_weight(0, 0) = 1.0;
  Sgd<double> opt(0.1, 0.5);
  opt.step(layer, 0);
  EXPECT_DOUBLE_EQ(layer.weight(0, 0), 0.9);
  opt.step(layer, 0);
  EXPECT_DOUBLE_EQ(layer.weight(0, 0), 0.9 - 0.1 * 1.5);
}

TEST(Activation, Names) {
  EXPECT_EQ(parse_activation("relu"), Activation::relu);
  EXPECT_EQ(to_string(Activation::maxk), "maxk");
  EXPECT_THROW(parse_activation("tanh"), ParameterError);
}
