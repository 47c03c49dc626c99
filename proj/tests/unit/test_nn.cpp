#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "helu/commands.hpp"
#include "helu/data.hpp"
#include "helu/nn.hpp"
#include "helu/rng.hpp"

using helu::ActivationSpec;
using helu::MlpModel;
using helu::Shape;
using helu::Tensor;

namespace {

const std::vector<std::size_t> kWidths{3, 8, 6, 3};

Tensor random_input(std::size_t b, std::size_t d, std::uint64_t seed) {
  helu::Rng rng(seed);
  Tensor x(Shape{b, d});
  for (double& v : x.values()) v = rng.normal();
  return x;
}

bool same_params(const MlpModel& a, const MlpModel& b) {
  if (a.layers.size() != b.layers.size()) return false;
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    if (!helu::bitwise_equal(a.layers[l].weight, b.layers[l].weight)) return false;
    if (!helu::bitwise_equal(a.layers[l].bias, b.layers[l].bias)) return false;
  }
  return true;
}

// Naive per-sample softmax cross-entropy, no max subtraction (inputs are small).
double naive_loss(const Tensor& logits, const std::vector<int>& labels) {
  double total = 0.0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    double z = 0.0;
    for (std::size_t c = 0; c < logits.cols(); ++c) z += std::exp(logits.at(i, c));
    total += -std::log(std::exp(logits.at(i, static_cast<std::size_t>(labels[i]))) / z);
  }
  return total / static_cast<double>(logits.rows());
}

}  // namespace

TEST(Nn, InitIsDeterministicWithZeroBias) {
  const auto a = helu::init_mlp(kWidths, ActivationSpec::relu(), 42);
  const auto b = helu::init_mlp(kWidths, ActivationSpec::relu(), 42);
  const auto c = helu::init_mlp(kWidths, ActivationSpec::relu(), 43);
  EXPECT_TRUE(same_params(a, b));
  EXPECT_FALSE(same_params(a, c));
  for (const auto& l : a.layers)
    for (double v : l.bias.values()) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(a.widths(), kWidths);
  EXPECT_THROW(helu::init_mlp(std::vector<std::size_t>{3, 2}, ActivationSpec::relu(), 1), std::invalid_argument);
}

TEST(Nn, XavierWeightsHaveZeroMean) {
  const std::vector<std::size_t> widths{400, 250, 2};
  const auto m = helu::init_mlp(widths, ActivationSpec::relu(), 7);
  const auto w = m.layers[0].weight.values();
  const double limit = std::sqrt(6.0 / 650.0);
  double mean = 0.0, mx = 0.0;
  for (double v : w) {
    mean += v;
    mx = std::max(mx, std::abs(v));
  }
  mean /= static_cast<double>(w.size());
  const double sigma = limit / std::sqrt(3.0);
  EXPECT_EQ(w.size(), 100000u);
  EXPECT_LT(std::abs(mean), 3.0 * sigma / std::sqrt(static_cast<double>(w.size())));
  EXPECT_LE(mx, limit);
}

TEST(Nn, EqualLogitsGiveLogK) {
  auto m = helu::init_mlp(kWidths, ActivationSpec::relu(), 1);
  for (auto& l : m.layers)
    for (double& v : l.weight.values()) v = 0.0;
  const auto r = helu::forward_loss(m, random_input(5, 3, 1), std::vector<int>{0, 1, 2, 0, 1});
  EXPECT_NEAR(r.loss, std::log(3.0), 1e-15);
}

TEST(Nn, ConfidentCorrectLogitsBeatLogK) {
  auto m = helu::init_mlp(kWidths, ActivationSpec::relu(), 1);
  for (auto& l : m.layers)
    for (double& v : l.weight.values()) v = 0.0;
  m.layers.back().bias[2] = 5.0;
  const auto r = helu::forward_loss(m, random_input(2, 3, 1), std::vector<int>{2, 2});
  EXPECT_LT(r.loss, std::log(3.0));
}

TEST(Nn, LossMatchesNaiveOracle) {
  const auto m = helu::init_mlp(kWidths, ActivationSpec::gelu(), 3);
  const std::vector<int> labels{0, 2, 1, 1, 0, 2, 2};
  const auto r = helu::forward_loss(m, random_input(7, 3, 9), labels);
  EXPECT_NEAR(r.loss, naive_loss(r.logits, labels), 1e-10);
  EXPECT_EQ(r.pre_activations.size(), 2u);
  EXPECT_THROW(helu::forward_loss(m, random_input(1, 3, 9), std::vector<int>{3}), helu::DataError);
}

TEST(Nn, HeluAndReluForwardIdenticalThroughNetwork) {
  const Tensor x = random_input(32, 3, 5);
  auto relu = helu::init_mlp(kWidths, ActivationSpec::relu(), 11);
  auto helu_m = relu;
  helu_m.activation = ActivationSpec::helu(0.5);
  const auto a = helu::forward_pass(relu, x);
  const auto b = helu::forward_pass(helu_m, x);
  EXPECT_TRUE(helu::bitwise_equal(a.logits, b.logits));
  for (std::size_t l = 0; l < a.pre_activations.size(); ++l)
    EXPECT_TRUE(helu::bitwise_equal(a.pre_activations[l], b.pre_activations[l]));
}

TEST(Nn, SgdPlainStep) {
  auto m = helu::init_mlp(kWidths, ActivationSpec::relu(), 1);
  const auto before = m;
  helu::Gradients g;
  for (const auto& l : m.layers) {
    g.weight.emplace_back(l.weight.shape(), 0.5);
    g.bias.emplace_back(l.bias.shape(), -1.0);
  }
  helu::TrainConfig cfg;
  cfg.momentum = 0.0;
  cfg.learning_rate = 0.1;
  helu::sgd_step(m, g, cfg);
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    for (std::size_t i = 0; i < m.layers[l].weight.size(); ++i)
      EXPECT_EQ(m.layers[l].weight[i], before.layers[l].weight[i] - 0.1 * 0.5);
    for (std::size_t i = 0; i < m.layers[l].bias.size(); ++i) EXPECT_EQ(m.layers[l].bias[i], 0.1);
  }
}

TEST(Nn, SgdMomentumSecondStep) {
  auto m = helu::init_mlp(std::vector<std::size_t>{1, 1, 1}, ActivationSpec::relu(), 1);
  helu::Gradients g;
  for (const auto& l : m.layers) {
    g.weight.emplace_back(l.weight.shape(), 2.0);
    g.bias.emplace_back(l.bias.shape(), 2.0);
  }
  helu::TrainConfig cfg;
  cfg.learning_rate = 0.01;
  cfg.momentum = 0.9;
  helu::sgd_step(m, g, cfg);
  const double w1 = m.layers[0].weight[0];
  helu::sgd_step(m, g, cfg);
  EXPECT_NEAR(w1 - m.layers[0].weight[0], 0.01 * 2.0 * 1.9, 1e-15);
}

TEST(Nn, SgdMatchesScalarReferenceOnQuadraticBowl) {
  // loss = 0.5 * c * w^2 per coordinate; gradient c*w.
  auto m = helu::init_mlp(std::vector<std::size_t>{2, 2, 2}, ActivationSpec::relu(), 4);
  const double c = 3.0;
  helu::TrainConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.momentum = 0.9;
  cfg.weight_decay = 0.01;
  std::vector<double> w_ref, v_ref;
  for (const auto& l : m.layers) {
    for (double v : l.weight.values()) w_ref.push_back(v);
    for (double v : l.bias.values()) w_ref.push_back(v == 0.0 ? 0.25 : v);
  }
  for (auto& l : m.layers)
    for (double& b : l.bias.values()) b = 0.25;
  v_ref.assign(w_ref.size(), 0.0);

  for (int step = 0; step < 10; ++step) {
    helu::Gradients g;
    for (const auto& l : m.layers) {
      g.weight.push_back(c * l.weight);
      g.bias.push_back(c * l.bias);
    }
    helu::sgd_step(m, g, cfg);
    for (std::size_t i = 0; i < w_ref.size(); ++i) {
      v_ref[i] = cfg.momentum * v_ref[i] + c * w_ref[i] + cfg.weight_decay * w_ref[i];
      w_ref[i] -= cfg.learning_rate * v_ref[i];
    }
  }
  std::size_t k = 0;
  for (const auto& l : m.layers) {
    for (double v : l.weight.values()) EXPECT_EQ(v, w_ref[k++]);
    for (double v : l.bias.values()) EXPECT_EQ(v, w_ref[k++]);
  }
}

TEST(Nn, SgdStepDecreasesConvexProbe) {
  auto m = helu::init_mlp(kWidths, ActivationSpec::relu(), 8);
  auto probe = [](const MlpModel& model) {
    double s = 0.0;
    for (const auto& l : model.layers)
      for (double v : l.weight.values()) s += 0.5 * v * v;
    return s;
  };
  helu::TrainConfig cfg;
  cfg.momentum = 0.0;
  cfg.learning_rate = 0.5;  // curvature 1, bound 2
  helu::Gradients g;
  for (const auto& l : m.layers) {
    g.weight.push_back(l.weight);
    g.bias.emplace_back(l.bias.shape(), 0.0);
  }
  const double before = probe(m);
  helu::sgd_step(m, g, cfg);
  EXPECT_LT(probe(m), before);
}

TEST(Nn, GradientMatchesFiniteDifferences) {
  const std::vector<std::size_t> widths{4, 7, 5, 3};
  auto m = helu::init_mlp(widths, ActivationSpec::swish(), 21);
  helu::Rng rng(21);
  for (auto& l : m.layers)
    for (double& b : l.bias.values()) b = 0.1 * rng.normal();
  const Tensor x = random_input(6, 4, 22);
  const std::vector<int> labels{0, 1, 2, 2, 1, 0};
  const auto lg = helu::loss_and_gradients(m, x, labels);
  const double h = 1e-4;
  for (int t = 0; t < 20; ++t) {
    const std::size_t l = rng.below(m.layers.size());
    const bool is_bias = rng.below(4) == 0;
    Tensor& param = is_bias ? m.layers[l].bias : m.layers[l].weight;
    const std::size_t i = rng.below(param.size());
    const double orig = param[i];
    param[i] = orig + h;
    const double up = helu::forward_loss(m, x, labels).loss;
    param[i] = orig - h;
    const double down = helu::forward_loss(m, x, labels).loss;
    param[i] = orig;
    const double fd = (up - down) / (2 * h);
    const double g = is_bias ? lg.grads.bias[l][i] : lg.grads.weight[l][i];
    EXPECT_LT(std::abs(g - fd) / std::max({std::abs(g), std::abs(fd), 1e-3}), 1e-5) << "layer " << l << " idx " << i;
  }
}

TEST(Nn, EvaluateTiesGoToLowestClass) {
  auto m = helu::init_mlp(kWidths, ActivationSpec::relu(), 1);
  for (auto& l : m.layers)
    for (double& v : l.weight.values()) v = 0.0;
  helu::Dataset d;
  d.features = random_input(4, 3, 2);
  d.labels = {0, 1, 0, 2};
  d.n_classes = 3;
  EXPECT_DOUBLE_EQ(helu::evaluate(m, d), 0.5);
}

TEST(Nn, TrainingIsBitwiseReproducible) {
  const auto data = helu::gen_spirals(120, 3, 0.1, 5);
  helu::TrainConfig cfg;
  cfg.epochs = 3;
  cfg.seed = 77;
  auto a = helu::init_mlp(std::vector<std::size_t>{2, 16, 3}, ActivationSpec::helu(0.05), 77);
  auto b = a;
  const auto ta = helu::train(a, data, cfg);
  const auto tb = helu::train(b, data, cfg);
  EXPECT_TRUE(same_params(a, b));
  EXPECT_EQ(helu::trace_csv(ta), helu::trace_csv(tb));
}

TEST(Nn, CheckpointRoundTrip) {
  const auto m = helu::init_mlp(kWidths, ActivationSpec::relu(), 31);
  const auto path = std::filesystem::temp_directory_path() / "helu_test_model.ckpt";
  helu::save_checkpoint(m, path);
  const std::string bytes = [&] {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  }();
  EXPECT_EQ(bytes.substr(0, 5), "HELU1");
  // rank of first tensor, little-endian u32
  EXPECT_EQ(bytes[5], 2);
  EXPECT_EQ(bytes[6], 0);
  // first dim (out = 8) as u64
  EXPECT_EQ(bytes[9], 8);
  const auto back = helu::load_checkpoint(path, ActivationSpec::relu());
  EXPECT_TRUE(same_params(m, back));

  std::ofstream(path, std::ios::binary) << "HELU2";
  EXPECT_THROW(helu::load_checkpoint(path, ActivationSpec::relu()), helu::DataError);
  std::filesystem::remove(path);
}
