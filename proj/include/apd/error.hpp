#pragma once

#include <stdexcept>
#include <string>

namespace apd {

/// Base exception for every failure raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument or contract violation at an API boundary.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: non-finite values, divergence, solver non-convergence.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace apd
