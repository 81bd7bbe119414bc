#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace dynembed {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad shape, bad value, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A file could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed input files.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// An iterative method ran out of iterations. `residuals` holds the final
/// residual of every quantity being iterated (one per eigenpair, or a single
/// value for scalar iterations).
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> residuals)
      : Error(what), residuals_(std::move(residuals)) {}
  const std::vector<double>& residuals() const noexcept { return residuals_; }

 private:
  std::vector<double> residuals_;
};

/// The transition matrix of a directed snapshot is reducible, so the
/// stationary vector is not unique. Enable teleport regularization or use the
/// Katz variant.
class ReducibleChainError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf appeared inside a numerical kernel.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Katz parameter outside the convergence region.
class KatzBoundError : public InvalidArgument {
 public:
  KatzBoundError(const std::string& what, double bound)
      : InvalidArgument(what), bound_(bound) {}
  double bound() const noexcept { return bound_; }

 private:
  double bound_;
};

}  // namespace dynembed
