#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace hfde {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A series or quadrature could not reach the requested accuracy.
class AccuracyError : public Error {
 public:
  AccuracyError(const std::string& what, double partial, double bound)
      : Error(what), partial_(partial), bound_(bound) {}
  double partial() const noexcept { return partial_; }
  double bound() const noexcept { return bound_; }

 private:
  double partial_;
  double bound_;
};

/// Grid too coarse near the evaluation point.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

/// A hypothesis of a theorem-level check does not hold (e.g. v not nondecreasing).
class HypothesisError : public Error {
 public:
  using Error::Error;
};

class InvertibilityError : public Error {
 public:
  InvertibilityError(const std::string& what, double condition)
      : Error(what), condition_(condition) {}
  double condition() const noexcept { return condition_; }

 private:
  double condition_;
};

/// Picard iteration did not reach the tolerance; carries the residual history.
class IterationError : public Error {
 public:
  IterationError(const std::string& what, std::vector<double> history)
      : Error(what), history_(std::move(history)) {}
  const std::vector<double>& history() const noexcept { return history_; }

 private:
  std::vector<double> history_;
};

}  // namespace hfde
