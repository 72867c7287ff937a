#pragma once

#include <stdexcept>
#include <string>

namespace fracschrod {

/// Argument outside the mathematical domain of an operation (negative time, H out of range, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Invalid or inconsistent configuration. The CLI maps this to exit status 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical failure (non-PD covariance, inner solve divergence, non-finite quadrature).
/// The CLI maps this to exit status 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fracschrod
