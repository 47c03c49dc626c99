#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "helu/activations.hpp"
#include "helu/tensor.hpp"

namespace helu {

/// Dead-unit statistics over one evaluation pass. A unit is dead when its
/// activation output is exactly zero for every sample.
struct DeadNeuronReport {
  std::vector<double> per_layer_dead_fraction;
  double total_dead_fraction = 0.0;
  std::size_t n_samples = 0;
  int epoch = 0;
};

/// Split of pre-activations by the gradient each would receive:
/// live z > 0, band -alpha < z <= 0, dead z <= -alpha.
struct MaskOccupancy {
  double live = 0.0;
  double band = 0.0;
  double dead = 0.0;
};

struct PreActivationHistogram {
  std::vector<double> bin_edges;  // n_bins + 1, strictly increasing
  std::vector<std::uint64_t> counts;
  double alpha = 0.0;
  double band_fraction = 0.0;  // share of values in (-alpha, 0]
};

/// `pre_activations` holds one [n x units] matrix per hidden layer, all with
/// the same n. Throws DataError when n == 0.
DeadNeuronReport dead_fraction(std::span<const Tensor> pre_activations, const ActivationSpec& activation, int epoch = 0);

/// Same bookkeeping against HeLU's gradient mask: a unit counts as dead when
/// z <= -alpha for every sample. Non-increasing in alpha.
DeadNeuronReport gradient_dead_fraction(std::span<const Tensor> pre_activations, double alpha, int epoch = 0);

MaskOccupancy grad_mask_occupancy(std::span<const Tensor> pre_activations, double alpha);
MaskOccupancy grad_mask_occupancy(const Tensor& pre_activations, double alpha);

inline constexpr std::size_t kDefaultHistogramBins = 101;
inline constexpr double kDefaultHistogramLo = -5.0;
inline constexpr double kDefaultHistogramHi = 5.0;

/// Uniform bins over [lo, hi]; values outside land in the end bins.
PreActivationHistogram histogram(std::span<const Tensor> pre_activations, std::size_t n_bins, double lo, double hi,
                                 double alpha);

std::string to_json(const DeadNeuronReport& report);
std::string to_json(const PreActivationHistogram& hist);
/// Rows `epoch,layer,dead_fraction,band_fraction`; layer "all" carries the totals.
std::vector<std::string> to_csv_rows(const DeadNeuronReport& report, std::span<const double> band_fraction_per_layer,
                                     double total_band_fraction);

}  // namespace helu
