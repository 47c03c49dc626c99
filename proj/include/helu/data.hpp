#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "helu/tensor.hpp"

namespace helu {

struct Dataset {
  Tensor features;  // [n x d]
  std::vector<int> labels;
  int n_classes = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return features.cols(); }

  /// Throws DataError unless labels are in range, n >= 1 and features are finite.
  void validate() const;
  Dataset subset(std::span<const std::size_t> index) const;
};

/// Isotropic Gaussian clusters around k centers drawn uniformly from [-4, 4]^d.
/// Sample i belongs to class i mod k before the final seeded shuffle.
Dataset gen_blobs(std::size_t n, std::size_t d, int k, double spread, std::uint64_t seed);

/// k interleaved 2-D spiral arms; `noise` is the std of angular jitter.
Dataset gen_spirals(std::size_t n, int k, double noise, std::uint64_t seed);

/// Header row names the columns; `label_column` is parsed as an integer
/// class, every other column as a feature. Quoted fields are not supported.
Dataset load_csv(const std::filesystem::path& path, const std::string& label_column);

/// IDX images (magic 0x00000803) and labels (0x00000801); pixels scaled to [0,1].
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

/// Seeded permutation split. The train part gets round(n * train_fraction)
/// rows, clamped so both parts are non-empty when n >= 2.
std::pair<Dataset, Dataset> split(const Dataset& data, double train_fraction, std::uint64_t seed);

struct Standardizer {
  std::vector<double> mean;
  std::vector<double> stddev;

  static Standardizer fit(const Dataset& data);
  void apply(Dataset& data) const;
};

}  // namespace helu
