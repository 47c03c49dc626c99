#include "helu/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include "json.hpp"

namespace helu {

namespace {

std::size_t common_rows(std::span<const Tensor> layers) {
  if (layers.empty()) throw DataError("no pre-activation layers given");
  const std::size_t n = layers.front().rows();
  for (const auto& t : layers) {
    if (t.rows() != n) throw DimensionError("pre-activation layers disagree on sample count");
  }
  if (n == 0) throw DataError("dead-neuron statistics need at least one sample");
  return n;
}

template <typename IsZeroOutput>
DeadNeuronReport count_dead(std::span<const Tensor> layers, int epoch, IsZeroOutput&& is_zero) {
  DeadNeuronReport report;
  report.n_samples = common_rows(layers);
  report.epoch = epoch;
  std::size_t dead_total = 0, units_total = 0;
  for (const auto& z : layers) {
    const std::size_t n = z.rows(), units = z.cols();
    std::vector<bool> alive(units, false);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t u = 0; u < units; ++u)
        if (!alive[u] && !is_zero(z.at(i, u))) alive[u] = true;
    const auto dead = static_cast<std::size_t>(std::count(alive.begin(), alive.end(), false));
    report.per_layer_dead_fraction.push_back(units == 0 ? 0.0 : static_cast<double>(dead) / static_cast<double>(units));
    dead_total += dead;
    units_total += units;
  }
  report.total_dead_fraction = units_total == 0 ? 0.0 : static_cast<double>(dead_total) / static_cast<double>(units_total);
  return report;
}

}  // namespace

DeadNeuronReport dead_fraction(std::span<const Tensor> pre_activations, const ActivationSpec& activation, int epoch) {
  if (activation.kind == ActivationKind::ReLU || activation.kind == ActivationKind::HeLU) {
    return count_dead(pre_activations, epoch, [](double z) { return z <= 0.0; });
  }
  const auto kind = activation.kind;
  const double a = activation.alpha;
  return count_dead(pre_activations, epoch, [kind, a](double z) { return scalar::forward(kind, a, z) == 0.0; });
}

DeadNeuronReport gradient_dead_fraction(std::span<const Tensor> pre_activations, double alpha, int epoch) {
  if (alpha < 0.0) throw DomainError("alpha must be >= 0");
  return count_dead(pre_activations, epoch, [t = -alpha](double z) { return z <= t; });
}

MaskOccupancy grad_mask_occupancy(std::span<const Tensor> pre_activations, double alpha) {
  if (alpha < 0.0) throw DomainError("alpha must be >= 0");
  std::size_t live = 0, band = 0, dead = 0;
  for (const auto& t : pre_activations) {
    for (double z : t.values()) {
      if (z > 0.0)
        ++live;
      else if (z > -alpha)
        ++band;
      else
        ++dead;
    }
  }
  const std::size_t n = live + band + dead;
  if (n == 0) throw DataError("grad_mask_occupancy: no values");
  const double inv = 1.0 / static_cast<double>(n);
  return {static_cast<double>(live) * inv, static_cast<double>(band) * inv, static_cast<double>(dead) * inv};
}

MaskOccupancy grad_mask_occupancy(const Tensor& pre_activations, double alpha) {
  return grad_mask_occupancy(std::span<const Tensor>(&pre_activations, 1), alpha);
}

PreActivationHistogram histogram(std::span<const Tensor> pre_activations, std::size_t n_bins, double lo, double hi,
                                 double alpha) {
  if (n_bins == 0 || !(hi > lo)) throw std::invalid_argument("histogram needs n_bins > 0 and hi > lo");
  if (alpha < 0.0) throw DomainError("alpha must be >= 0");
  PreActivationHistogram h;
  h.alpha = alpha;
  h.bin_edges.resize(n_bins + 1);
  const double width = (hi - lo) / static_cast<double>(n_bins);
  for (std::size_t i = 0; i <= n_bins; ++i) h.bin_edges[i] = lo + width * static_cast<double>(i);
  h.bin_edges.back() = hi;
  h.counts.assign(n_bins, 0);

  std::size_t total = 0, band = 0;
  for (const auto& t : pre_activations) {
    for (double z : t.values()) {
      const double pos = std::floor((z - lo) / width);
      std::size_t bin = 0;
      if (pos >= static_cast<double>(n_bins))
        bin = n_bins - 1;
      else if (pos > 0.0)
        bin = static_cast<std::size_t>(pos);
      ++h.counts[bin];
      ++total;
      if (z > -alpha && z <= 0.0) ++band;
    }
  }
  h.band_fraction = total == 0 ? 0.0 : static_cast<double>(band) / static_cast<double>(total);
  return h;
}

std::string to_json(const DeadNeuronReport& report) {
  nlohmann::json j;
  j["epoch"] = report.epoch;
  j["n_samples"] = report.n_samples;
  j["per_layer_dead_fraction"] = report.per_layer_dead_fraction;
  j["total_dead_fraction"] = report.total_dead_fraction;
  return j.dump();
}

std::string to_json(const PreActivationHistogram& hist) {
  nlohmann::json j;
  j["alpha"] = hist.alpha;
  j["band_fraction"] = hist.band_fraction;
  j["bin_edges"] = hist.bin_edges;
  j["counts"] = hist.counts;
  return j.dump();
}

std::vector<std::string> to_csv_rows(const DeadNeuronReport& report, std::span<const double> band_fraction_per_layer,
                                     double total_band_fraction) {
  std::vector<std::string> rows;
  for (std::size_t l = 0; l < report.per_layer_dead_fraction.size(); ++l) {
    const double band = l < band_fraction_per_layer.size() ? band_fraction_per_layer[l] : 0.0;
    rows.push_back(fmt::format("{},{},{},{}", report.epoch, l, report.per_layer_dead_fraction[l], band));
  }
  rows.push_back(fmt::format("{},all,{},{}", report.epoch, report.total_dead_fraction, total_band_fraction));
  return rows;
}

}  // namespace helu
