#include <gtest/gtest.h>

#include <cmath>

#include "helu/autograd.hpp"
#include "helu/rng.hpp"

namespace ag = helu::autograd;
using helu::ActivationSpec;
using helu::Shape;
using helu::Tensor;

TEST(Autograd, SquareGradient) {
  ag::Tape tape;
  const auto x = tape.leaf(Tensor::scalar(3.0));
  const auto y = ag::square(tape, x);
  tape.backprop(y);
  EXPECT_NEAR(tape.grad(x).item(), 6.0, 1e-12);
}

TEST(Autograd, HeluPassesGradientThroughBand) {
  ag::Tape tape;
  const auto x = tape.leaf(Tensor::scalar(-0.03));
  const auto y = ag::activation(tape, ActivationSpec::helu(0.05), x);
  EXPECT_EQ(tape.value(y).item(), 0.0);
  tape.backprop(y);
  EXPECT_EQ(tape.grad(x).item(), 1.0);
}

TEST(Autograd, ActivationNodeSavesPreActivation) {
  ag::Tape tape;
  const auto x = tape.leaf(Tensor::vector({-0.5, 0.25}));
  const auto y = ag::activation(tape, ActivationSpec::helu(0.05), x);
  const auto& node = tape.node(y);
  ASSERT_EQ(node.saved.size(), 1u);
  EXPECT_TRUE(helu::bitwise_equal(node.saved[0], tape.value(x)));
}

TEST(Autograd, DanglingInputRejected) {
  ag::Tape tape;
  tape.leaf(Tensor::scalar(1.0));
  EXPECT_THROW(tape.record("bad", {5}, {}, Tensor::scalar(0.0), nullptr), helu::GraphError);
}

TEST(Autograd, NonScalarLossRejected) {
  ag::Tape tape;
  const auto x = tape.leaf(Tensor::vector({1, 2}));
  EXPECT_THROW(tape.backprop(x), helu::GraphError);
}

TEST(Autograd, FanOutAccumulates) {
  // y = x^2 + 3x  => dy/dx = 2x + 3
  ag::Tape tape;
  const auto x = tape.leaf(Tensor::scalar(1.5));
  const auto y = ag::add(tape, ag::square(tape, x), ag::scale(tape, x, 3.0));
  tape.backprop(y);
  EXPECT_DOUBLE_EQ(tape.grad(x).item(), 6.0);
}

TEST(Autograd, ZeroGradsClears) {
  ag::Tape tape;
  const auto x = tape.leaf(Tensor::scalar(2.0));
  const auto y = ag::square(tape, x);
  tape.backprop(y);
  ASSERT_TRUE(tape.has_grad(x));
  tape.zero_grads();
  EXPECT_FALSE(tape.has_grad(x));
  EXPECT_EQ(tape.grad(x).item(), 0.0);
}

TEST(Autograd, RepeatedBackpropIsBitwiseDeterministic) {
  helu::Rng rng(1);
  ag::Tape tape;
  Tensor xv(Shape{4, 3}), wv(Shape{5, 3}), bv(Shape{5});
  for (double& v : xv.values()) v = rng.normal();
  for (double& v : wv.values()) v = rng.normal();
  for (double& v : bv.values()) v = rng.normal();
  const auto x = tape.leaf(xv), w = tape.leaf(wv), b = tape.leaf(bv);
  const auto z = ag::linear(tape, x, w, b);
  const auto h = ag::activation(tape, ActivationSpec::gelu(), z);
  const auto loss = ag::sum(tape, ag::square(tape, h));
  tape.backprop(loss);
  const Tensor g1 = tape.grad(w);
  tape.zero_grads();
  tape.backprop(loss);
  EXPECT_TRUE(helu::bitwise_equal(g1, tape.grad(w)));
}

// y = w * HeLU(z), z = w * x. Hand-derived: dy/dw = HeLU(z) + w * mask(z) * x.
TEST(Autograd, SurrogateChainRuleClosedForm) {
  const double alpha = 0.05;
  for (double wv : {0.7, -0.02, -0.5}) {
    for (double xv : {1.0, 0.9, -2.0, 0.01}) {
      ag::Tape tape;
      const auto w = tape.leaf(Tensor::scalar(wv));
      const auto x = tape.leaf(Tensor::scalar(xv));
      const auto z = ag::mul(tape, w, x);
      const auto a = ag::activation(tape, ActivationSpec::helu(alpha), z);
      const auto y = ag::mul(tape, w, a);
      tape.backprop(y);
      const double zv = wv * xv;
      const double mask = zv > -alpha ? 1.0 : 0.0;
      const double expected = std::max(zv, 0.0) + wv * mask * xv;
      EXPECT_DOUBLE_EQ(tape.grad(w).item(), expected) << "w=" << wv << " x=" << xv;
    }
  }
}

TEST(Autograd, SoftmaxCrossEntropyGradientMatchesFiniteDifference) {
  helu::Rng rng(2);
  Tensor logits(Shape{3, 4});
  for (double& v : logits.values()) v = rng.normal();
  const std::vector<int> labels{0, 3, 1};
  ag::Tape tape;
  const auto l = tape.leaf(logits);
  const auto loss = ag::softmax_cross_entropy(tape, l, labels);
  tape.backprop(loss);
  const Tensor g = tape.grad(l);

  auto value = [&](const Tensor& t) {
    ag::Tape t2;
    return t2.value(ag::softmax_cross_entropy(t2, t2.leaf(t), labels)).item();
  };
  const double h = 1e-5;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    Tensor up = logits, down = logits;
    up[i] += h;
    down[i] -= h;
    EXPECT_NEAR(g[i], (value(up) - value(down)) / (2 * h), 1e-9);
  }
}

TEST(Autograd, SoftmaxLabelOutOfRange) {
  ag::Tape tape;
  const auto l = tape.leaf(Tensor(Shape{1, 3}));
  EXPECT_THROW(ag::softmax_cross_entropy(tape, l, {3}), helu::DataError);
}

// Two-layer net with 4 scalar parameters: y = w2 * gelu(w1 * x + b1) + b2, loss = y^2.
TEST(Autograd, TinyMlpMatchesFiniteDifference) {
  helu::Rng rng(8);
  double params[4];
  for (double& p : params) p = rng.normal();
  const double xv = rng.normal();

  auto build = [&](const double* p, ag::Tape& tape, ag::NodeId* ids) {
    for (int i = 0; i < 4; ++i) ids[i] = tape.leaf(Tensor::scalar(p[i]));
    const auto x = tape.leaf(Tensor::scalar(xv));
    const auto z = ag::add(tape, ag::mul(tape, ids[0], x), ids[1]);
    const auto h = ag::activation(tape, ActivationSpec::gelu(), z);
    const auto y = ag::add(tape, ag::mul(tape, ids[2], h), ids[3]);
    return ag::square(tape, y);
  };

  ag::Tape tape;
  ag::NodeId ids[4];
  const auto loss = build(params, tape, ids);
  tape.backprop(loss);
  const double h = 1e-4;
  for (int i = 0; i < 4; ++i) {
    double up[4], down[4];
    std::copy(params, params + 4, up);
    std::copy(params, params + 4, down);
    up[i] += h;
    down[i] -= h;
    ag::Tape tu, td;
    ag::NodeId unused[4];
    const double fu = tu.value(build(up, tu, unused)).item();
    const double fd = td.value(build(down, td, unused)).item();
    const double fdiff = (fu - fd) / (2 * h);
    const double g = tape.grad(ids[i]).item();
    EXPECT_LT(std::abs(g - fdiff) / std::max({std::abs(g), std::abs(fdiff), 1e-3}), 1e-5) << "param " << i;
  }
}
