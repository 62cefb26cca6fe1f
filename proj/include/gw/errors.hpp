#pragma once

#include <stdexcept>
#include <string>

namespace gw {

/// Base of every error raised by the library. `kind()` is a stable
/// machine-readable tag used by the CLI when it reports failures.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
  virtual int exit_code() const noexcept { return 1; }
};

/// Malformed or assumption-violating input (bad masses, out-of-range arguments).
class ValidationError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "validation"; }
  int exit_code() const noexcept override { return 2; }
};

class DomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
  const char* kind() const noexcept override { return "domain"; }
};

/// Too much probability mass escaped the truncation box.
class TruncationError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "truncation"; }
  int exit_code() const noexcept override { return 3; }
};

/// A conditioning event carries no retained probability.
class DegenerateConditionError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "degenerate-condition"; }
  int exit_code() const noexcept override { return 4; }
};

class SpectralError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "spectral"; }
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "iteration-limit"; }
};

/// Internal consistency check failed (e.g. a q-tilted model that is not subcritical).
class InconsistencyError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "inconsistency"; }
};

}  // namespace gw
