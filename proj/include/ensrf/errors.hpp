#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace ensrf {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite entries, asymmetric input where symmetry is required.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Operand dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Bad experiment or file configuration (sequence lengths, counts, orders).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Fewer usable points than a fit needs.
class InsufficientData : public Error {
 public:
  using Error::Error;
};

/// Too many failed Monte Carlo replicates; what() lists the failing seeds.
class ExperimentAborted : public Error {
 public:
  using Error::Error;
};

/// Numerical degeneracy. Filter drivers attach the time step at which the
/// failure happened; what() then carries the step index.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& msg) : Error(msg), message_(msg) {}

  void set_step(std::size_t step) {
    step_ = step;
    message_ = "step " + std::to_string(step) + ": " + Error::what();
  }
  std::optional<std::size_t> step() const noexcept { return step_; }
  const char* what() const noexcept override { return message_.c_str(); }

 private:
  std::optional<std::size_t> step_;
  std::string message_;
};

/// Smallest eigenvalue below -psdTol * |A|.
class NotPsdError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Smallest eigenvalue below the SPD floor.
class NotSpdError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// The ensemble-space transform could not be formed.
class TransformDegeneracy : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace ensrf
