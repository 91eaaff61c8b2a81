#pragma once

#include <stdexcept>

namespace bopt {

// Conditioning or convergence failure inside numerical routines (Cholesky
// escalation exhausted, slice shrinkage cap hit, all optimizer starts failed).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Grid-restricted search has no unused grid points left.
struct GridExhaustedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A state or config document that cannot be decoded: wrong version, missing
// fields, truncation.
struct StateFormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace bopt
