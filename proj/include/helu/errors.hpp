#pragma once

#include <stdexcept>
#include <string>

namespace helu {

/// Shape disagreement between operands.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Value outside an operation's domain (non-finite input, negative alpha, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed autograd graph or misuse of the tape.
class GraphError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Bad dataset contents or unparseable input files.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Timing could not be measured reliably.
class MeasurementError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace helu
