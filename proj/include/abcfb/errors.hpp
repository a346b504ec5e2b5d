#pragma once

#include <stdexcept>

namespace abcfb {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Inconsistent shapes: layout mismatches, empty blocks, bad matrix dimensions.
struct StructuralError : Error {
  using Error::Error;
};

// Numeric parameter out of range: nonpositive stepsize, probabilities that do
// not sum to one, safety factor outside (0,1), and the like.
struct ParameterError : Error {
  using Error::Error;
};

// A stepsize safety rule would be violated (the contraction margin delta
// reaches 2) and unsafe mode was not requested.
struct RuleViolationError : Error {
  using Error::Error;
};

// An internal invariant failed at runtime: history underflow, mismatched
// iteration counters, or a failed read-decomposition check.
struct ContractError : Error {
  using Error::Error;
};

}  // namespace abcfb
