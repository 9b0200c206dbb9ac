#pragma once

#include <stdexcept>
#include <string>

namespace isolab {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad arguments, malformed config, shape mismatches.  CLI maps these to exit 1.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& msg) : Error(msg) {}
};

class ShapeError : public ValidationError {
 public:
  explicit ShapeError(const std::string& msg) : ValidationError(msg) {}
};

class IoError : public ValidationError {
 public:
  explicit IoError(const std::string& msg) : ValidationError(msg) {}
};

// Numerical failures (non-convergence, singular systems, degenerate scales).
// CLI maps these to exit 2.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& msg) : Error(msg) {}
};

class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& msg, double best_estimate)
      : NumericalError(msg), best_estimate_(best_estimate) {}
  double best_estimate() const noexcept { return best_estimate_; }

 private:
  double best_estimate_;
};

class SingularityError : public NumericalError {
 public:
  explicit SingularityError(const std::string& msg) : NumericalError(msg) {}
};

// Degenerate numerical input: scale factor below threshold, zero MSE
// denominator, and similar.
class DegenerateError : public NumericalError {
 public:
  explicit DegenerateError(const std::string& msg) : NumericalError(msg) {}
};

}  // namespace isolab
