#pragma once

#include <stdexcept>
#include <string>

namespace disagg {

enum class ErrorCode {
  invalid_argument,
  quadrature_failure,
  degenerate_sample,
  synthesis_failure,
  conditioning,
  config,
  failure_threshold,
  io,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::quadrature_failure: return "quadrature_failure";
    case ErrorCode::degenerate_sample: return "degenerate_sample";
    case ErrorCode::synthesis_failure: return "synthesis_failure";
    case ErrorCode::conditioning: return "conditioning";
    case ErrorCode::config: return "config";
    case ErrorCode::failure_threshold: return "failure_threshold";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

/// Base of every exception thrown by the library. Carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what)
      : Error(ErrorCode::invalid_argument, what) {}
};

/// Quadrature did not reach the requested tolerance; `achieved_error` is the last estimate.
class QuadratureError : public Error {
 public:
  QuadratureError(const std::string& what, double achieved_error)
      : Error(ErrorCode::quadrature_failure,
              what + " (achieved error estimate " + std::to_string(achieved_error) + ")"),
        achieved_error_(achieved_error) {}

  double achieved_error() const noexcept { return achieved_error_; }

 private:
  double achieved_error_;
};

/// The innovation-variance estimate sigma(0) - sigma(2) was not positive.
class DegenerateSampleError : public Error {
 public:
  DegenerateSampleError(const std::string& what, double sigma_eps2_hat)
      : Error(ErrorCode::degenerate_sample, what), value_(sigma_eps2_hat) {}

  double sigma_eps2_hat() const noexcept { return value_; }

 private:
  double value_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCode::config, what) {}
};

}  // namespace disagg
