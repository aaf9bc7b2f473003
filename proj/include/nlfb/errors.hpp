#pragma once

#include <stdexcept>
#include <string>

namespace nlfb {

/// Bad input or a violated precondition (CLI exit code 2).
class ValidationError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Any numerical failure: divergence, instability, ambiguous output (exit 3).
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class NonConvergenceError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class ReducibleMatrixError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class BlowUpError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

/// The delta-ladder neither stabilised nor escaped; enlarge the domain.
class AmbiguousRegimeError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

/// Discrete monotonicity broke down beyond tolerance (grid too coarse).
class MonotonicityError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class StabilityError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class BudgetExceededError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

}  // namespace nlfb
