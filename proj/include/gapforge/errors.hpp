#pragma once

#include <stdexcept>
#include <string>

namespace gapforge {

// Base class for all toolkit errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Matrix/batch dimensions do not agree.
struct ShapeError : Error {
  using Error::Error;
};

// A row with (near-)zero norm reached normalization; signals degenerate
// encoder output.
struct ZeroRowError : Error {
  using Error::Error;
};

// An operation received embeddings that are required to be row-normalized
// but are not.
struct NotNormalizedError : Error {
  using Error::Error;
};

// NaN/Inf encountered where finite values are required.
struct NumericError : Error {
  using Error::Error;
};

// Operation is outside its defined domain (e.g. contrastive term with M != 2).
struct UnsupportedError : Error {
  using Error::Error;
};

// Invalid configuration value, flag, or incompatible inputs.
struct ConfigError : Error {
  using Error::Error;
};

// File read/write failure.
struct IoError : Error {
  using Error::Error;
};

}  // namespace gapforge
