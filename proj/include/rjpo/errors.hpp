#pragma once

#include <stdexcept>
#include <string>

namespace rjpo {

/// Invalid model or run configuration (CLI exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Violated precondition on a call argument, e.g. a shape mismatch (exit code 1).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite values, solver breakdown or a degenerate conditional (exit code 2).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Conjugate gradient breakdown, e.g. p'Qp <= 0 on a matrix that is not positive definite.
class CgBreakdown : public NumericalError {
 public:
  CgBreakdown(int iteration, const std::string& what)
      : NumericalError("CG breakdown at iteration " + std::to_string(iteration) + ": " + what),
        iteration_(iteration) {}
  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

/// File system failures (exit code 3).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rjpo
