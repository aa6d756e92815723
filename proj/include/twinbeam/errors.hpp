#pragma once

#include <stdexcept>
#include <string>

namespace twinbeam {

/// Invalid user-facing configuration (grid sizes, lengths, config files).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Shape mismatch between operands.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite values handed to a numerical kernel.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A numerical precondition or postcondition was measured to fail.
class ContractViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bloch-Messiah factorization could not be completed.
class DecompositionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Structural preconditions of an analytic route do not hold.
class RegimeError : public std::runtime_error {
 public:
  RegimeError(const std::string& what, double residual)
      : std::runtime_error(what + " (residual " + std::to_string(residual) + ")"),
        residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Iterative procedure left its expected behaviour (e.g. non-monotone response).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace twinbeam
