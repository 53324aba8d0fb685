#pragma once

#include <stdexcept>
#include <string>

namespace cef {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dimension or layout mismatch between tensors/blocks.
struct ShapeError : Error {
  using Error::Error;
};

// Evaluation inside a singular guard (inversion near the origin, SCT
// denominator near zero, stereographic north pole).
struct SingularityError : Error {
  using Error::Error;
};

// Non-finite value produced where a finite one is required.
struct NumericError : Error {
  using Error::Error;
};

// Operation used before required initialization (e.g. ActNorm).
struct StateError : Error {
  using Error::Error;
};

// Invalid run configuration or checkpoint content.
struct ConfigError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace cef
