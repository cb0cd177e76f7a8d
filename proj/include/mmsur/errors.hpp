#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mmsur {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape disagreement between operands.
struct DimensionError : Error {
  using Error::Error;
};

// Cholesky hit a non-positive pivot; `pivot` is the failing row index.
struct NotPositiveDefiniteError : Error {
  std::size_t pivot;
  NotPositiveDefiniteError(const std::string& msg, std::size_t pivot_index)
      : Error(msg), pivot(pivot_index) {}
};

// Value outside the support of a density.
struct SupportError : Error {
  using Error::Error;
};

// API misuse: violated precondition that is not a numerical issue.
struct ContractError : Error {
  using Error::Error;
};

// Numerical failure inside an otherwise valid computation (e.g. a
// conjugate update producing a non-SPD matrix).
struct NumericalError : Error {
  using Error::Error;
};

// Malformed input file (CSV schema, config syntax).
struct SchemaError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace mmsur
