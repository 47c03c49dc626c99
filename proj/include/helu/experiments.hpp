#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "helu/activations.hpp"
#include "helu/commands.hpp"
#include "helu/nn.hpp"

namespace helu {

/// Per-seed raw values for one arm plus their summaries.
struct ArmResult {
  ActivationSpec activation;
  std::vector<std::uint64_t> seeds;
  std::vector<double> dead_fraction;
  std::vector<double> test_acc;
  std::vector<TrainingTrace> traces;
  Summary dead;
  Summary acc;
};

/// Death-induction protocol, versioned as "dying-relu-v1". Every arm for a
/// given seed starts from the same parameters and sees the same batch order;
/// only the activation's backward rule differs between ReLU and HeLU arms.
///
///   blobs(n=800, d=8, k=4, spread=1.0, data seed 7), 75/25 split
///   MLP 8-32-32-4, momentum 0.9, batch 32
///   warm-up: warmup_epochs at lr 0.01
///   perturbation: every hidden bias -= bias_shift
///   stress: stress_epochs at lr_aggressive
///   dead fraction measured on the training set after the stress phase
struct DyingReluOptions {
  int seeds = 10;
  double lr_aggressive = 0.1;
  double bias_shift = 2.0;
  int warmup_epochs = 3;
  int stress_epochs = 10;
  std::uint64_t base_seed = 2024;
  int jobs = 1;
};

struct DyingReluReport {
  std::string protocol = "dying-relu-v1";
  DyingReluOptions options;
  std::vector<ArmResult> arms;  // relu, helu:0.05, gelu, helu:0

  const ArmResult& arm(const std::string& name) const;
  bool relu_has_dead_units() const;
  bool helu_not_worse_than_relu() const;
  bool alpha_zero_matches_relu() const;
};

DyingReluReport exp_dying_relu(const DyingReluOptions& options = {});

/// Accuracy on spirals(n=600, k=3, noise=0.2, data seed 11) per alpha, plus
/// a ReLU reference arm, all paired by seed. MLP 2-64-64-3, lr 0.05,
/// momentum 0.9, batch 32.
struct AlphaSweepOptions {
  std::vector<double> alphas{0.0, 0.001, 0.01, 0.05, 0.1, 1.0, 2.0};
  int seeds = 10;
  int epochs = 40;
  double learning_rate = 0.05;
  std::uint64_t base_seed = 4242;
  int jobs = 1;
};

struct AlphaSweepReport {
  AlphaSweepOptions options;
  ArmResult relu;
  std::vector<ArmResult> helu;  // same order as options.alphas

  /// Index into `helu` of the highest mean accuracy among alpha > 0 arms.
  std::size_t best_arm() const;
  double pooled_std() const;  // of best arm and ReLU arm
  bool non_inferior() const;  // best >= relu - 2 * pooled_std
  /// Largest-alpha arm below the best arm; an observation, not a gate.
  bool large_alpha_collapses() const;
};

AlphaSweepReport exp_alpha_sensitivity(const AlphaSweepOptions& options = {});

/// report.json, runs.csv and summary.csv under dir.
void write_report(const DyingReluReport& report, const std::filesystem::path& dir);
void write_report(const AlphaSweepReport& report, const std::filesystem::path& dir);

}  // namespace helu
