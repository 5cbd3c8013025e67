#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace rbda {

/// Process exit codes used by the command-line driver.
enum class ExitCode : int {
  success = 0,
  failure = 1,
  config_error = 2,
  numerical_blowup = 3,
  missing_input = 4,
};

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what, ExitCode code = ExitCode::failure)
      : std::runtime_error(what), code_(code) {}
  ExitCode exit_code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

/// Invalid configuration, parameter or incompatible operands.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what, ExitCode::config_error) {}
};

/// Non-finite state or Courant number above the abort threshold.
class NumericalBlowup : public Error {
 public:
  NumericalBlowup(const std::string& what, std::int64_t step)
      : Error(what + " (step " + std::to_string(step) + ")", ExitCode::numerical_blowup),
        step_(step) {}
  std::int64_t step() const noexcept { return step_; }

 private:
  std::int64_t step_;
};

/// Elliptic solve whose residual exceeded tolerance.
class SolverFailure : public Error {
 public:
  SolverFailure(const std::string& what, double residual)
      : Error(what + " (residual " + std::to_string(residual) + ")",
              ExitCode::numerical_blowup),
        residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Required input (file, snapshot, observation frame) is absent.
class MissingInput : public Error {
 public:
  explicit MissingInput(const std::string& what) : Error(what, ExitCode::missing_input) {}
};

/// A diagnostic or score is undefined for the given input (e.g. zero norm).
class UndefinedMetric : public Error {
 public:
  explicit UndefinedMetric(const std::string& what) : Error(what, ExitCode::config_error) {}
};

/// Sample with zero variance handed to a distribution test.
class DegenerateSample : public Error {
 public:
  explicit DegenerateSample(const std::string& what) : Error(what, ExitCode::failure) {}
};

}  // namespace rbda
