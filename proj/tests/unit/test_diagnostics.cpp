#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "helu/diagnostics.hpp"
#include "helu/rng.hpp"

using helu::ActivationSpec;
using helu::Shape;
using helu::Tensor;

namespace {

std::span<const Tensor> one(const Tensor& t) { return {&t, 1}; }

// Brute-force scan: unit u is dead iff every sample is <= 0.
double scan_dead(const Tensor& z) {
  std::size_t dead = 0;
  for (std::size_t u = 0; u < z.cols(); ++u) {
    bool all_nonpos = true;
    for (std::size_t i = 0; i < z.rows(); ++i) all_nonpos = all_nonpos && z.at(i, u) <= 0.0;
    dead += all_nonpos ? 1 : 0;
  }
  return static_cast<double>(dead) / static_cast<double>(z.cols());
}

}  // namespace

TEST(Diagnostics, DeadFractionExtremes) {
  const Tensor neg(Shape{5, 4}, -1.0), pos(Shape{5, 4}, 1.0);
  EXPECT_EQ(helu::dead_fraction(one(neg), ActivationSpec::relu()).total_dead_fraction, 1.0);
  EXPECT_EQ(helu::dead_fraction(one(pos), ActivationSpec::relu()).total_dead_fraction, 0.0);
}

TEST(Diagnostics, DeadFractionMatchesBruteForce) {
  const Tensor z = Tensor::matrix({{0.5, -1.0, -0.2, 0.0}, {-0.1, -2.0, 0.3, -1.0}, {-0.3, -0.5, -0.4, 2.0}});
  const auto r = helu::dead_fraction(one(z), ActivationSpec::helu(0.05));
  EXPECT_EQ(r.total_dead_fraction, 0.25);
  EXPECT_EQ(r.total_dead_fraction, scan_dead(z));
  EXPECT_EQ(r.n_samples, 3u);
}

TEST(Diagnostics, DeadFractionRandomAgainstScanAndMultiLayer) {
  helu::Rng rng(4);
  std::vector<Tensor> layers;
  for (std::size_t width : {7u, 13u}) {
    Tensor z(Shape{9, width});
    for (std::size_t u = 0; u < width; ++u) {
      const double shift = rng.uniform(-3, 1);
      for (std::size_t i = 0; i < 9; ++i) z.at(i, u) = shift + 0.5 * rng.normal();
    }
    layers.push_back(z);
  }
  const auto r = helu::dead_fraction(layers, ActivationSpec::relu());
  ASSERT_EQ(r.per_layer_dead_fraction.size(), 2u);
  EXPECT_EQ(r.per_layer_dead_fraction[0], scan_dead(layers[0]));
  EXPECT_EQ(r.per_layer_dead_fraction[1], scan_dead(layers[1]));
  EXPECT_DOUBLE_EQ(r.total_dead_fraction, (scan_dead(layers[0]) * 7 + scan_dead(layers[1]) * 13) / 20);
}

TEST(Diagnostics, SmoothActivationsUseExactZeroOutput) {
  const Tensor z(Shape{3, 2}, -1.0);
  EXPECT_EQ(helu::dead_fraction(one(z), ActivationSpec::gelu()).total_dead_fraction, 0.0);
}

TEST(Diagnostics, EmptyDataRejected) {
  const Tensor z(Shape{0, 3});
  EXPECT_THROW(helu::dead_fraction(one(z), ActivationSpec::relu()), helu::DataError);
}

TEST(Diagnostics, GradientDeadFractionMonotoneInAlpha) {
  helu::Rng rng(6);
  Tensor z(Shape{20, 50});
  for (std::size_t u = 0; u < 50; ++u) {
    const double shift = rng.uniform(-1.5, 0.2);
    for (std::size_t i = 0; i < 20; ++i) z.at(i, u) = shift + 0.1 * rng.normal();
  }
  double prev = 2.0;
  for (double alpha : {0.0, 0.001, 0.01, 0.05, 0.1, 0.5, 1.0, 2.0}) {
    const double d = helu::gradient_dead_fraction(one(z), alpha).total_dead_fraction;
    EXPECT_LE(d, prev) << alpha;
    prev = d;
  }
}

TEST(Diagnostics, OccupancyHandCount) {
  const Tensor z = Tensor::vector({-2.0, -0.03, 0.5});
  const auto o = helu::grad_mask_occupancy(z, 0.05);
  EXPECT_DOUBLE_EQ(o.live, 1.0 / 3);
  EXPECT_DOUBLE_EQ(o.band, 1.0 / 3);
  EXPECT_DOUBLE_EQ(o.dead, 1.0 / 3);
  EXPECT_EQ(helu::grad_mask_occupancy(z, 0.0).band, 0.0);
  // boundary: -alpha is dead, 0 is band
  const auto b = helu::grad_mask_occupancy(Tensor::vector({-0.05, 0.0}), 0.05);
  EXPECT_EQ(b.dead, 0.5);
  EXPECT_EQ(b.band, 0.5);
}

TEST(Diagnostics, OccupancySumsToOne) {
  helu::Rng rng(7);
  for (int t = 0; t < 200; ++t) {
    Tensor z(Shape{1 + rng.below(300)});
    for (double& v : z.values()) v = rng.normal();
    const auto o = helu::grad_mask_occupancy(z, rng.uniform(0, 1));
    ASSERT_NEAR(o.live + o.band + o.dead, 1.0, 1e-12);
  }
}

TEST(Diagnostics, GaussianBandMatchesCdf) {
  helu::Rng rng(2024);
  const std::size_t n = 1'000'000;
  Tensor z(Shape{n});
  for (double& v : z.values()) v = rng.normal();
  const double alpha = 0.05;
  const double p = 0.5 - 0.5 * std::erfc(alpha / std::sqrt(2.0));  // Phi(0) - Phi(-alpha)
  EXPECT_NEAR(p, 0.0199, 1e-4);
  const double sigma = std::sqrt(p * (1 - p) / static_cast<double>(n));
  EXPECT_NEAR(helu::grad_mask_occupancy(z, alpha).band, p, 3 * sigma);
}

TEST(Diagnostics, HistogramSingleValue) {
  const Tensor z = Tensor::vector({0.01});
  const auto h = helu::histogram(one(z), 10, -1, 1, 0.0);
  EXPECT_EQ(std::accumulate(h.counts.begin(), h.counts.end(), std::uint64_t{0}), 1u);
  EXPECT_EQ(h.counts[5], 1u);
  EXPECT_EQ(h.bin_edges.size(), 11u);
}

TEST(Diagnostics, HistogramSymmetricAndClamped) {
  const Tensor z = Tensor::vector({-0.7, 0.7, -0.7, 0.7, -9, 9});
  const auto h = helu::histogram(one(z), 4, -1, 1, 0.0);
  for (std::size_t b = 0; b < 4; ++b) EXPECT_EQ(h.counts[b], h.counts[3 - b]);
  EXPECT_EQ(h.counts.front(), 3u);
  for (std::size_t i = 1; i < h.bin_edges.size(); ++i) EXPECT_LT(h.bin_edges[i - 1], h.bin_edges[i]);
}

TEST(Diagnostics, HistogramUniformMultinomial) {
  helu::Rng rng(10);
  Tensor z(Shape{100000});
  for (double& v : z.values()) v = rng.uniform();
  const auto h = helu::histogram(one(z), 10, 0.0, 1.0, 0.0);
  std::uint64_t total = 0;
  // each bin count is Binomial(1e5, 0.1)
  const double sd = std::sqrt(1e5 * 0.1 * 0.9);
  for (auto c : h.counts) {
    EXPECT_NEAR(static_cast<double>(c), 1e4, 3 * sd);
    total += c;
  }
  EXPECT_EQ(total, 100000u);
}

TEST(Diagnostics, HistogramBandFraction) {
  const Tensor z = Tensor::vector({-0.04, -0.06, 0.0, 0.5});
  const auto h = helu::histogram(one(z), helu::kDefaultHistogramBins, helu::kDefaultHistogramLo,
                                 helu::kDefaultHistogramHi, 0.05);
  EXPECT_EQ(h.band_fraction, 0.5);
}

TEST(Diagnostics, EmitJsonAndCsv) {
  helu::DeadNeuronReport r;
  r.per_layer_dead_fraction = {0.25, 0.5};
  r.total_dead_fraction = 0.375;
  r.n_samples = 10;
  r.epoch = 3;
  EXPECT_NE(helu::to_json(r).find("\"total_dead_fraction\":0.375"), std::string::npos);
  const std::vector<double> band{0.1, 0.2};
  const auto rows = helu::to_csv_rows(r, band, 0.15);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0], "3,0,0.25,0.1");
  EXPECT_EQ(rows[2], "3,all,0.375,0.15");
}
