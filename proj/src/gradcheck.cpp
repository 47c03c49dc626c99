#include "helu/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "helu/rng.hpp"

namespace helu {

std::string to_string(GradStatus s) {
  switch (s) {
    case GradStatus::Ok:
      return "OK";
    case GradStatus::ExpectedMismatch:
      return "EXPECTED-MISMATCH";
    case GradStatus::Mismatch:
      return "MISMATCH";
  }
  return "?";
}

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-3});
}

namespace {

bool near_kink(double z, const std::vector<double>& kinks, double radius) {
  return std::any_of(kinks.begin(), kinks.end(), [&](double k) { return std::abs(z - k) <= radius; });
}

bool in_band(const ActivationSpec& spec, double z, double radius) {
  return spec.kind == ActivationKind::HeLU && spec.alpha > 0.0 && z > -spec.alpha + radius && z < -radius;
}

}  // namespace

GradcheckReport run_gradcheck(const ActivationSpec& spec, std::size_t n_points, std::uint64_t seed,
                              const GradcheckOptions& options) {
  GradcheckReport report;
  report.spec = spec;
  report.options = options;
  const auto kinks = kink_points(spec);
  const double h = options.step;
  Rng rng(seed);

  auto check = [&](double z) {
    GradcheckPoint p;
    p.z = z;
    const double up = scalar::forward(spec.kind, spec.alpha, z + h);
    const double down = scalar::forward(spec.kind, spec.alpha, z - h);
    p.finite_difference = (up - down) / (2.0 * h);
    p.backward = backward(spec, Tensor::scalar(z), Tensor::scalar(1.0)).item();
    p.rel_error = relative_error(p.finite_difference, p.backward);
    if (in_band(spec, z, options.kink_radius)) {
      p.status = (p.finite_difference == 0.0 && p.backward == 1.0) ? GradStatus::ExpectedMismatch : GradStatus::Mismatch;
    } else {
      p.status = p.rel_error < options.tolerance ? GradStatus::Ok : GradStatus::Mismatch;
      report.max_rel_error = std::max(report.max_rel_error, p.rel_error);
    }
    switch (p.status) {
      case GradStatus::Ok:
        ++report.ok;
        break;
      case GradStatus::ExpectedMismatch:
        ++report.expected_mismatch;
        break;
      case GradStatus::Mismatch:
        ++report.mismatch;
        break;
    }
    report.points.push_back(p);
  };

  for (std::size_t i = 0; i < n_points; ++i) {
    double z;
    do {
      z = rng.uniform(options.lo, options.hi);
    } while (near_kink(z, kinks, options.kink_radius));
    check(z);
  }
  if (spec.kind == ActivationKind::HeLU && spec.alpha > 2.0 * options.kink_radius) {
    for (std::size_t i = 0; i < n_points; ++i) {
      check(rng.uniform(-spec.alpha + options.kink_radius, -options.kink_radius));
    }
  }
  return report;
}

}  // namespace helu
