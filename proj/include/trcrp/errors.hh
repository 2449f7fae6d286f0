// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <stdexcept>
#include <string>

namespace trcrp {

// Malformed or inconsistent input data (CSV cells, prefix rows, labels).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite likelihoods or collapsed particle weights.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid options or arguments supplied by the caller.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace trcrp
