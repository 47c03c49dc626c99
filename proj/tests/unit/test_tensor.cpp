#include <gtest/gtest.h>

#include <cmath>

#include "helu/rng.hpp"
#include "helu/tensor.hpp"

using helu::Shape;
using helu::Tensor;

namespace {

Tensor random_matrix(std::size_t r, std::size_t c, helu::Rng& rng) {
  Tensor t(Shape{r, c});
  for (double& v : t.values()) v = rng.uniform(-2.0, 2.0);
  return t;
}

// Independent triple loop, same left-to-right order over k.
Tensor naive_matmul(const Tensor& a, const Tensor& b) {
  const auto m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  std::vector<double> out(m * n, 0.0);
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += av[i * k + p] * bv[p * n + j];
      out[i * n + j] = s;
    }
  return Tensor(Shape{m, n}, out);
}

}  // namespace

TEST(Tensor, ShapeMustMatchData) {
  EXPECT_THROW(Tensor(Shape{2, 3}, std::vector<double>(5)), helu::DimensionError);
  Tensor t(Shape{2, 3}, 1.5);
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(Tensor::scalar(4.0).item(), 4.0);
}

TEST(Tensor, MatmulIdentity) {
  const Tensor id = Tensor::matrix({{1, 0}, {0, 1}});
  const Tensor m = Tensor::matrix({{2.5, -1}, {7, 3}});
  EXPECT_TRUE(helu::bitwise_equal(helu::matmul(id, m), m));
}

TEST(Tensor, MatmulHandArithmetic) {
  const Tensor r = helu::matmul(Tensor::matrix({{1, 2}}), Tensor::matrix({{3}, {4}}));
  EXPECT_EQ(r.shape(), (Shape{1, 1}));
  EXPECT_EQ(r[0], 11.0);
}

TEST(Tensor, MatmulMatchesTripleLoopBitwise) {
  helu::Rng rng(17);
  const Tensor a = random_matrix(5, 7, rng), b = random_matrix(7, 3, rng);
  EXPECT_TRUE(helu::bitwise_equal(helu::matmul(a, b), naive_matmul(a, b)));
  for (std::size_t m = 1; m <= 8; ++m)
    for (std::size_t k = 1; k <= 8; ++k)
      for (std::size_t n = 1; n <= 8; n += 3) {
        const Tensor x = random_matrix(m, k, rng), y = random_matrix(k, n, rng);
        ASSERT_TRUE(helu::bitwise_equal(helu::matmul(x, y), naive_matmul(x, y))) << m << "x" << k << "x" << n;
      }
}

TEST(Tensor, MatmulShapeErrorNamesBothShapes) {
  try {
    helu::matmul(Tensor(Shape{2, 3}), Tensor(Shape{2, 3}));
    FAIL() << "expected DimensionError";
  } catch (const helu::DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2x3]"), std::string::npos) << msg;
  }
}

TEST(Tensor, ElementwiseAndReductions) {
  const Tensor neg = helu::ewise_map(Tensor::vector({-1, 0, 2}), [](double x) { return -x; });
  EXPECT_EQ(neg[0], 1.0);
  EXPECT_EQ(neg[2], -2.0);

  const Tensor s = helu::reduce_sum(Tensor::matrix({{1, 2}, {3, 4}}), 0);
  EXPECT_EQ(s.shape(), (Shape{2}));
  EXPECT_EQ(s[0], 4.0);
  EXPECT_EQ(s[1], 6.0);
  const Tensor r = helu::reduce_sum(Tensor::matrix({{1, 2}, {3, 4}}), 1);
  EXPECT_EQ(r[0], 3.0);
  EXPECT_EQ(r[1], 7.0);

  EXPECT_THROW(helu::ewise_zip(Tensor::vector({1, 2}), Tensor::vector({1, 2, 3}), std::plus<>()),
               helu::DimensionError);
}

TEST(Tensor, ReduceMeanMatchesNaiveAccumulation) {
  helu::Rng rng(99);
  Tensor t(Shape{1000, 1});
  for (double& v : t.values()) v = rng.uniform();
  double naive = 0.0;
  for (double v : t.values()) naive += v;
  naive /= 1000.0;
  EXPECT_NEAR(helu::reduce_mean(t, 0)[0], naive, 1e-12);
}

TEST(Tensor, ReshapeRoundTripIsBitwise) {
  helu::Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t a = 1 + rng.below(6), b = 1 + rng.below(6), c = 1 + rng.below(6);
    Tensor t(Shape{a, b, c});
    for (double& v : t.values()) v = rng.normal();
    const Tensor back = t.reshape(Shape{a * b, c}).reshape(Shape{c, a * b}).reshape(Shape{a, b, c});
    ASSERT_TRUE(helu::bitwise_equal(back, t));
  }
  EXPECT_THROW(Tensor(Shape{2, 3}).reshape(Shape{4}), helu::DimensionError);
}

TEST(Tensor, RowVectorBroadcastOnly) {
  const Tensor m = helu::add_row_vector(Tensor::matrix({{1, 2}, {3, 4}}), Tensor::vector({10, 20}));
  EXPECT_EQ(m.at(1, 1), 24.0);
  EXPECT_THROW(helu::add_row_vector(Tensor::matrix({{1, 2}}), Tensor::vector({1, 2, 3})), helu::DimensionError);
}
