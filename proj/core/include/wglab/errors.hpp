#pragma once

#include <stdexcept>
#include <string>

namespace wglab {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: shapes, ranges, boundary conditions, config keys.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A grid cannot represent what was asked of it (too many modes, band limit).
class ResolutionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Time step or grid combination that the integrator refuses (CFL).
class ConfigurationError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A structural condition failed; `witness` describes where.
class ConditionViolation : public ValidationError {
 public:
  ConditionViolation(const std::string& what, std::string witness)
      : ValidationError(what + " (witness: " + witness + ")"), witness_(std::move(witness)) {}
  const std::string& witness() const noexcept { return witness_; }

 private:
  std::string witness_;
};

/// Non-finite values appeared during time stepping.
class InstabilityError : public Error {
 public:
  InstabilityError(const std::string& what, double time)
      : Error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

}  // namespace wglab
