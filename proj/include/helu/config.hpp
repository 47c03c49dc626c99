#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "helu/activations.hpp"
#include "helu/data.hpp"
#include "helu/nn.hpp"

namespace helu {

struct DataConfig {
  std::string task = "spirals";  // blobs | spirals | csv | idx
  std::size_t n = 600;
  std::size_t dim = 2;
  int classes = 3;
  double spread = 1.0;
  double noise = 0.2;
  std::string csv_path;
  std::string label_column = "label";
  std::string idx_images;
  std::string idx_labels;
  double train_fraction = 0.8;
  bool standardize = false;
  std::uint64_t seed = 1;
};

/// Everything needed to reproduce a run. Serialized verbatim next to every
/// output so a result can be rebuilt from its own artifacts.
struct ExperimentConfig {
  DataConfig data;
  std::vector<std::size_t> hidden{64, 64};
  std::string activation = "relu";
  TrainConfig train;
  std::vector<std::string> sweep_activations;
  std::vector<double> sweep_alphas;
  int seeds = 1;
  int jobs = 1;
  std::string output_dir = "out";

  /// Sets one dotted key (e.g. "train.lr"). Throws std::invalid_argument on
  /// unknown keys or unparseable values.
  void set(std::string_view key, std::string_view value);

  /// Flat `key=value` lines, sorted by key.
  std::string to_text() const;

  ActivationSpec activation_spec() const { return parse_activation(activation); }

  /// Sweep arms in grid order: sweep_activations first, then helu:<a> for each
  /// alpha. Falls back to the single configured activation.
  std::vector<ActivationSpec> sweep_grid() const;

  void validate() const;
};

/// Parses `key=value` lines; '#' starts a comment, blank lines are ignored.
ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {});

/// Builds the dataset named by `task` and splits it into (train, test). When
/// standardize is on, both parts use statistics fitted on train.
std::pair<Dataset, Dataset> make_datasets(const DataConfig& config);

}  // namespace helu
