#pragma once

#include <stdexcept>
#include <string>

namespace dean {

// Base of all library errors. The CLI maps the subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad flags, out-of-range parameters, violated preconditions.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Malformed files, dimension mismatches, degenerate inputs.
class DataError : public Error {
 public:
  using Error::Error;
};

// Non-finite values during training or evaluation.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace dean
