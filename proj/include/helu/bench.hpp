#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "helu/activations.hpp"

namespace helu {

struct NsPerElement {
  double min = 0.0;
  double median = 0.0;
  double mean = 0.0;
  double p95 = 0.0;
};

struct BenchRecord {
  std::string kernel;
  std::size_t n_elements = 0;
  int reps = 0;
  NsPerElement ns_per_element;
  double throughput_gelem_per_s = 0.0;
  int float_width = 64;
  double checksum = 0.0;
};

struct BenchOptions {
  int warmup = 3;
  /// Untimed run-up of the same kernel before every timed repetition.
  double settle_ms = 2.0;
  std::uint64_t seed = 0x5eed;
};

inline constexpr std::size_t kMinBenchElements = 10'000;
inline constexpr int kMinBenchReps = 10;

/// Times the elementwise forward loop over n seeded standard-normal inputs.
/// Only the loop is timed; allocation and input generation are not. Throws
/// MeasurementError when the clock is coarser than 1% of a repetition.
BenchRecord bench_forward(const ActivationSpec& spec, std::size_t n, int reps, int float_width,
                          const BenchOptions& options = {});

/// Benchmarks several kernels on the same inputs with their repetitions
/// interleaved, so the records are comparable with each other.
std::vector<BenchRecord> bench_forward_suite(std::span<const ActivationSpec> specs, std::size_t n, int reps,
                                             int float_width, const BenchOptions& options = {});

/// Times forward + backward + momentum step of an MLP on one batch.
/// ns_per_element is per sample.
BenchRecord bench_train_step(const ActivationSpec& spec, std::span<const std::size_t> widths, std::size_t batch,
                             int reps, const BenchOptions& options = {});

/// Order statistics of raw per-rep timings (already per element).
NsPerElement summarize(std::vector<double> samples);

std::string bench_csv_header();
std::string to_csv_row(const BenchRecord& r);
std::string to_json(const BenchRecord& r);

}  // namespace helu
