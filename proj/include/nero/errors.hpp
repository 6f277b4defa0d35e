#pragma once

#include <stdexcept>
#include <string>

namespace nero {

// Error taxonomy, mapped to CLI exit codes:
//   ConfigError / DimensionError -> 2
//   NumericalError / DegenerateError -> 3
//   DataError -> 4
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Shape/contract violation (mismatched matmul dims, non-scalar loss, ...).
struct DimensionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Non-finite values, vanishing normalizers, divergence.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Degenerate neuron/row (zero norm after centering, etc.).
struct DegenerateError : NumericalError {
  using NumericalError::NumericalError;
};

/// Malformed input files, bad magic numbers, truncated payloads.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace nero
