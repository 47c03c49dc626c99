#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "helu/activations.hpp"

namespace helu {

enum class GradStatus { Ok, ExpectedMismatch, Mismatch };

std::string to_string(GradStatus s);

struct GradcheckPoint {
  double z = 0.0;
  double finite_difference = 0.0;
  double backward = 0.0;
  double rel_error = 0.0;
  GradStatus status = GradStatus::Ok;
};

struct GradcheckOptions {
  double step = 1e-4;
  double tolerance = 1e-5;
  /// Points closer than this to a kink are redrawn.
  double kink_radius = 1e-3;
  double lo = -5.0;
  double hi = 5.0;
};

struct GradcheckReport {
  ActivationSpec spec;
  GradcheckOptions options;
  std::vector<GradcheckPoint> points;
  std::size_t ok = 0;
  std::size_t expected_mismatch = 0;
  std::size_t mismatch = 0;
  double max_rel_error = 0.0;  // over Ok/Mismatch points only

  bool passed() const { return mismatch == 0; }
};

/// |a - b| / max(|a|, |b|, 1e-3). The floor keeps points near a zero of the
/// derivative from reporting huge ratios of round-off.
double relative_error(double a, double b);

/// Compares the central difference of the forward map with the registered
/// backward (upstream = 1) at n_points seeded points in [lo, hi]. For HeLU
/// with alpha > 0 another n_points are drawn inside the hysteresis band
/// (-alpha + kink_radius, -kink_radius), where the two must disagree: those
/// are EXPECTED-MISMATCH when FD is 0 and backward is 1.
GradcheckReport run_gradcheck(const ActivationSpec& spec, std::size_t n_points, std::uint64_t seed,
                              const GradcheckOptions& options = {});

}  // namespace helu
