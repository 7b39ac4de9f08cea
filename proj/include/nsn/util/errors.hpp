#pragma once

#include <stdexcept>
#include <string>

namespace nsn {

// Base for all library failures that are not plain argument errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Array or tensor shape does not match what an operation expects.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Operation called on an object that is not in the required state
// (missing factorization, consumed graph, ...).
class StateError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
};

// Non-finite values encountered during a numerical computation.
// Landweber stepsize above the 2 / |A|^2 stability bound.
class StabilityError : public Error {
 public:
  using Error::Error;
};

class FaultError : public Error {
 public:
  using Error::Error;
};

class CorruptionError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class StatisticsError : public Error {
 public:
  using Error::Error;
};

}  // namespace nsn
