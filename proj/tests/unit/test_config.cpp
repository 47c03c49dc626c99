#include <gtest/gtest.h>

#include "helu/config.hpp"

TEST(Config, ParseWithCommentsAndOverrides) {
  const auto c = helu::parse_config(
      "# comment\n"
      "task = blobs\n"
      "data.n=120  # trailing\n"
      "\n"
      "model.hidden=16,8\n"
      "activation=helu:0.05\n"
      "train.lr=0.1\n"
      "train.epochs=3\n");
  EXPECT_EQ(c.data.task, "blobs");
  EXPECT_EQ(c.data.n, 120u);
  EXPECT_EQ(c.hidden, (std::vector<std::size_t>{16, 8}));
  EXPECT_EQ(c.activation_spec(), helu::ActivationSpec::helu(0.05));
  EXPECT_EQ(c.train.learning_rate, 0.1);
  EXPECT_EQ(c.train.epochs, 3);

  auto d = c;
  d.set("train.epochs", "7");
  EXPECT_EQ(d.train.epochs, 7);
}

TEST(Config, TextRoundTrip) {
  helu::ExperimentConfig c;
  c.set("sweep.activations", "relu,gelu");
  c.set("sweep.alphas", "0.01,0.1");
  c.set("train.lr", "0.3");
  c.set("data.standardize", "true");
  const auto back = helu::parse_config(c.to_text());
  EXPECT_EQ(back.to_text(), c.to_text());
  EXPECT_EQ(back.sweep_alphas, c.sweep_alphas);
  EXPECT_TRUE(back.data.standardize);
}

TEST(Config, Errors) {
  helu::ExperimentConfig c;
  EXPECT_THROW(c.set("train.bogus", "1"), std::invalid_argument);
  EXPECT_THROW(c.set("train.epochs", "ten"), std::invalid_argument);
  try {
    helu::parse_config("task=blobs\nno equals sign\n");
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(Config, SweepGridOrder) {
  helu::ExperimentConfig c;
  EXPECT_EQ(c.sweep_grid().size(), 1u);
  c.set("sweep.activations", "relu,gelu");
  c.set("sweep.alphas", "0.05,1");
  const auto g = c.sweep_grid();
  ASSERT_EQ(g.size(), 4u);
  EXPECT_EQ(helu::to_string(g[0]), "relu");
  EXPECT_EQ(helu::to_string(g[1]), "gelu");
  EXPECT_EQ(helu::to_string(g[2]), "helu:0.05");
  EXPECT_EQ(helu::to_string(g[3]), "helu:1");
}

TEST(Config, MakeDatasetsDeterministic) {
  helu::DataConfig d;
  d.task = "blobs";
  d.n = 100;
  d.dim = 3;
  const auto [a_train, a_test] = helu::make_datasets(d);
  const auto [b_train, b_test] = helu::make_datasets(d);
  EXPECT_EQ(a_train.size(), 80u);
  EXPECT_EQ(a_test.size(), 20u);
  EXPECT_TRUE(helu::bitwise_equal(a_train.features, b_train.features));
  EXPECT_EQ(a_test.labels, b_test.labels);
}
