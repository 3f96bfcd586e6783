#pragma once

#include <stdexcept>
#include <string>

namespace aquad {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad argument or configuration (dimension mismatch, out-of-range parameter).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Two or more nodes coincide.
class DegenerateNodes : public Error {
 public:
  using Error::Error;
};

/// K + jitter*I is not numerically positive definite.
class ConditioningError : public Error {
 public:
  ConditioningError(const std::string& what, double smallest_pivot)
      : Error(what), smallest_pivot_(smallest_pivot) {}
  double smallest_pivot() const noexcept { return smallest_pivot_; }

 private:
  double smallest_pivot_;
};

/// The operation does not apply to this kernel family.
class Unsupported : public Error {
 public:
  using Error::Error;
};

/// NN route asked for Z-hat without Voronoi measures.
class MissingMeasures : public Error {
 public:
  using Error::Error;
};

/// Cached state does not belong to the model it is used with.
class InvalidState : public Error {
 public:
  using Error::Error;
};

/// Non-finite importance weights or similar numeric breakdown.
class NumericFailure : public Error {
 public:
  using Error::Error;
};

/// The target refused an evaluation because its budget is spent.
class BudgetExhausted : public Error {
 public:
  using Error::Error;
};

}  // namespace aquad
