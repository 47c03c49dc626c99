#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "helu/tensor.hpp"

namespace helu {

enum class ActivationKind { ReLU, HeLU, ELU, Sigmoid, Swish, GELUExact, GELUTanh };

/// An activation identity. `alpha` is the hysteresis shift for HeLU and the
/// negative-branch scale for ELU; other kinds ignore it.
struct ActivationSpec {
  ActivationKind kind = ActivationKind::ReLU;
  double alpha = 0.0;

  static ActivationSpec relu() { return {ActivationKind::ReLU, 0.0}; }
  static ActivationSpec helu(double alpha);
  static ActivationSpec elu(double alpha = 1.0);
  static ActivationSpec sigmoid() { return {ActivationKind::Sigmoid, 0.0}; }
  static ActivationSpec swish() { return {ActivationKind::Swish, 0.0}; }
  static ActivationSpec gelu() { return {ActivationKind::GELUExact, 0.0}; }
  static ActivationSpec gelu_tanh() { return {ActivationKind::GELUTanh, 0.0}; }

  bool operator==(const ActivationSpec&) const = default;
};

/// Parses `relu | helu:<alpha> | elu[:<alpha>] | sigmoid | swish | gelu | gelu-tanh`.
ActivationSpec parse_activation(std::string_view text);
/// Inverse of parse_activation; alpha printed in shortest round-trip form.
std::string to_string(const ActivationSpec& spec);

/// True when backward is the analytic derivative of forward everywhere
/// except at isolated kinks. False only for HeLU with alpha > 0.
bool has_true_derivative(const ActivationSpec& spec);
/// Points where forward is not differentiable (or backward is discontinuous).
std::vector<double> kink_points(const ActivationSpec& spec);

namespace scalar {

inline constexpr double kSqrt2OverPi = 0.7978845608028654;  // sqrt(2/pi)
inline constexpr double kGeluTanhCubic = 0.044715;

template <typename T>
inline T relu(T z) {
  return z > T(0) ? z : T(0);
}

template <typename T>
inline T sigmoid(T z) {
  if (z >= T(0)) return T(1) / (T(1) + std::exp(-z));
  const T e = std::exp(z);
  return e / (T(1) + e);
}

template <typename T>
inline T elu(T z, T alpha) {
  return z > T(0) ? z : alpha * std::expm1(z);
}

template <typename T>
inline T swish(T z) {
  return z * sigmoid(z);
}

/// Standard normal CDF, evaluated through erfc so the lower tail keeps
/// relative precision.
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

template <typename T>
inline T gelu_exact(T z) {
  return T(0.5) * z * std::erfc(-z / std::numbers::sqrt2_v<T>);
}

/// (z/2) * (1 + tanh(sqrt(2/pi) * (z + 0.044715 z^3)))
template <typename T>
inline T gelu_tanh(T z) {
  const T u = T(kSqrt2OverPi) * (z + T(kGeluTanhCubic) * z * z * z);
  return T(0.5) * z * (T(1) + std::tanh(u));
}

template <typename T>
inline T forward(ActivationKind kind, T alpha, T z) {
  switch (kind) {
    case ActivationKind::ReLU:
    case ActivationKind::HeLU:
      return relu(z);
    case ActivationKind::ELU:
      return elu(z, alpha);
    case ActivationKind::Sigmoid:
      return sigmoid(z);
    case ActivationKind::Swish:
      return swish(z);
    case ActivationKind::GELUExact:
      return gelu_exact(z);
    case ActivationKind::GELUTanh:
      return gelu_tanh(z);
  }
  return z;
}

/// d(forward)/dz for kinds with a real derivative; the {0,1} mask for the
/// ReLU family. ReLU's mask at exactly 0 is 0; HeLU's mask is 1 iff z > -alpha.
double local_gradient(ActivationKind kind, double alpha, double z);

}  // namespace scalar

double gelu_tanh_approx(double z);

/// Elementwise activation. Throws DomainError on non-finite input.
Tensor forward(const ActivationSpec& spec, const Tensor& z);

/// Gradient with respect to the pre-activation `z` given the upstream
/// gradient. `z` must be the saved pre-activation, not the forward output.
/// ReLU and HeLU select `upstream` or 0; all other kinds multiply.
Tensor backward(const ActivationSpec& spec, const Tensor& z, const Tensor& upstream);

}  // namespace helu
