#pragma once

#include <stdexcept>
#include <string>

namespace hypflow {

// Argument outside the domain of a curvature function or geometric formula
// (nonpositive principal curvature, nonpositive radius, extinct time).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Caller broke a documented precondition (non-symmetric matrix, i == j, ...).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed configuration, spec string, or out-of-range run parameter.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Initial data does not satisfy a hypothesis of the convergence theorem
// (positive sectional curvature, positive radial graph).
class HypothesisError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Time step underflow: the scheme could not produce an admissible state.
class BlowUpError : public std::runtime_error {
 public:
  BlowUpError(const std::string& what, double t) : std::runtime_error(what), time_(t) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

}  // namespace hypflow
