#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "helu/config.hpp"
#include "helu/nn.hpp"

namespace helu {

/// Result of a single configured training job.
struct RunResult {
  ActivationSpec activation;
  std::uint64_t seed = 0;
  MlpModel model;
  TrainingTrace trace;
  double final_loss = 0.0;
  double train_acc = 0.0;
  double test_acc = 0.0;
  double dead_fraction = 0.0;
  double band_fraction = 0.0;
};

RunResult run_training(const ExperimentConfig& config, const ActivationSpec& activation, std::uint64_t seed);

/// Mean and sample standard deviation; std is 0 when n == 1.
struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  double std = 0.0;
};
Summary summarize_values(const std::vector<double>& v);

std::string trace_csv(const TrainingTrace& trace);

/// Writes trace.csv, dead_neurons.csv, metrics.json, model.ckpt and
/// config.txt under config.output_dir. Returns 0.
int cmd_train(const ExperimentConfig& config, std::ostream& log);

/// Runs every grid arm x seeds. Seed for arm i, replicate j is
/// derive_seed(train.seed, {i, j}). Writes runs.csv, summary.csv and
/// config.txt. Returns 0.
int cmd_sweep(const ExperimentConfig& config, std::ostream& log);

/// Writes gradcheck.csv and gradcheck.json under out_dir. Non-zero exit only
/// on unexpected mismatches.
int cmd_gradcheck(const ActivationSpec& spec, std::size_t n_points, std::uint64_t seed,
                  const std::filesystem::path& out_dir, std::ostream& log);

/// Writes bench.csv and bench.jsonl. Exit 1 when a kernel cannot be timed.
int cmd_bench(const std::vector<ActivationSpec>& kernels, std::size_t n, int reps, int float_width,
              const std::filesystem::path& out_dir, std::ostream& log);

/// Pre-activation histogram of a checkpoint over the configured dataset
/// (train + test). Band alpha comes from the activation when it is HeLU.
/// Writes histogram.csv, histogram.json, histogram.gp and config.txt.
int cmd_hist(const std::filesystem::path& checkpoint, const ExperimentConfig& config, std::size_t n_bins,
             const std::filesystem::path& out_dir, std::ostream& log);

}  // namespace helu
