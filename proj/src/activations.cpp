#include "helu/activations.hpp"

#include <charconv>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace helu {

namespace {

void require_alpha(double alpha, const char* kind) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw DomainError(fmt::format("{} requires a finite alpha >= 0, got {}", kind, alpha));
  }
}

double parse_number(std::string_view text, std::string_view whole) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end) {
    throw std::invalid_argument(fmt::format("bad activation parameter in '{}'", whole));
  }
  return v;
}

}  // namespace

ActivationSpec ActivationSpec::helu(double alpha) {
  require_alpha(alpha, "helu");
  return {ActivationKind::HeLU, alpha};
}

ActivationSpec ActivationSpec::elu(double alpha) {
  require_alpha(alpha, "elu");
  return {ActivationKind::ELU, alpha};
}

ActivationSpec parse_activation(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view name = text.substr(0, colon);
  const bool has_param = colon != std::string_view::npos;
  const std::string_view param = has_param ? text.substr(colon + 1) : std::string_view{};

  if (name == "helu") {
    if (!has_param) throw std::invalid_argument("helu needs an alpha, e.g. helu:0.05");
    return ActivationSpec::helu(parse_number(param, text));
  }
  if (name == "elu") return ActivationSpec::elu(has_param ? parse_number(param, text) : 1.0);
  if (has_param) throw std::invalid_argument(fmt::format("activation '{}' takes no parameter", name));
  if (name == "relu") return ActivationSpec::relu();
  if (name == "sigmoid") return ActivationSpec::sigmoid();
  if (name == "swish") return ActivationSpec::swish();
  if (name == "gelu") return ActivationSpec::gelu();
  if (name == "gelu-tanh") return ActivationSpec::gelu_tanh();
  throw std::invalid_argument(fmt::format("unknown activation '{}'", text));
}

std::string to_string(const ActivationSpec& spec) {
  switch (spec.kind) {
    case ActivationKind::ReLU:
      return "relu";
    case ActivationKind::HeLU:
      return fmt::format("helu:{}", spec.alpha);
    case ActivationKind::ELU:
      return spec.alpha == 1.0 ? "elu" : fmt::format("elu:{}", spec.alpha);
    case ActivationKind::Sigmoid:
      return "sigmoid";
    case ActivationKind::Swish:
      return "swish";
    case ActivationKind::GELUExact:
      return "gelu";
    case ActivationKind::GELUTanh:
      return "gelu-tanh";
  }
  return "?";
}

bool has_true_derivative(const ActivationSpec& spec) {
  return !(spec.kind == ActivationKind::HeLU && spec.alpha > 0.0);
}

std::vector<double> kink_points(const ActivationSpec& spec) {
  switch (spec.kind) {
    case ActivationKind::ReLU:
      return {0.0};
    case ActivationKind::HeLU:
      return spec.alpha > 0.0 ? std::vector<double>{-spec.alpha, 0.0} : std::vector<double>{0.0};
    case ActivationKind::ELU:
      return {0.0};
    default:
      return {};
  }
}

double scalar::local_gradient(ActivationKind kind, double alpha, double z) {
  switch (kind) {
    case ActivationKind::ReLU:
      return z > 0.0 ? 1.0 : 0.0;
    case ActivationKind::HeLU:
      return z > -alpha ? 1.0 : 0.0;
    case ActivationKind::ELU:
      return z > 0.0 ? 1.0 : alpha * std::exp(z);
    case ActivationKind::Sigmoid: {
      const double s = sigmoid(z);
      return s * (1.0 - s);
    }
    case ActivationKind::Swish: {
      const double s = sigmoid(z);
      return s + z * s * (1.0 - s);
    }
    case ActivationKind::GELUExact:
      return normal_cdf(z) + z * normal_pdf(z);
    case ActivationKind::GELUTanh: {
      const double z2 = z * z;
      const double t = std::tanh(kSqrt2OverPi * (z + kGeluTanhCubic * z2 * z));
      const double du = kSqrt2OverPi * (1.0 + 3.0 * kGeluTanhCubic * z2);
      return 0.5 * (1.0 + t) + 0.5 * z * (1.0 - t * t) * du;
    }
  }
  return 0.0;
}

double gelu_tanh_approx(double z) {
  if (!std::isfinite(z)) throw DomainError("gelu_tanh_approx: non-finite input");
  return scalar::gelu_tanh(z);
}

Tensor forward(const ActivationSpec& spec, const Tensor& z) {
  if (auto bad = nonfinite_indices(z); !bad.empty()) {
    const std::size_t shown = std::min<std::size_t>(bad.size(), 16);
    throw DomainError(fmt::format("activation {}: non-finite input at {} index(es): {}{}", to_string(spec), bad.size(),
                                  fmt::join(bad.begin(), bad.begin() + static_cast<std::ptrdiff_t>(shown), ","),
                                  shown < bad.size() ? ",..." : ""));
  }
  const auto kind = spec.kind;
  const double alpha = spec.alpha;
  return ewise_map(z, [kind, alpha](double v) { return scalar::forward(kind, alpha, v); });
}

Tensor backward(const ActivationSpec& spec, const Tensor& z, const Tensor& upstream) {
  require_same_shape(z, upstream, "activation backward");
  switch (spec.kind) {
    case ActivationKind::ReLU:
      return ewise_zip(z, upstream, [](double v, double g) { return v > 0.0 ? g : 0.0; });
    case ActivationKind::HeLU: {
      const double threshold = -spec.alpha;
      return ewise_zip(z, upstream, [threshold](double v, double g) { return v > threshold ? g : 0.0; });
    }
    default: {
      const auto kind = spec.kind;
      const double alpha = spec.alpha;
      return ewise_zip(z, upstream,
                       [kind, alpha](double v, double g) { return scalar::local_gradient(kind, alpha, v) * g; });
    }
  }
}

}  // namespace helu
