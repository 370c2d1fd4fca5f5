#pragma once

#include <stdexcept>
#include <string>

namespace spca {

// Base class for all library errors.  The taxonomy mirrors the process exit
// codes used by the command-line tool: invalid configuration or parameters
// exit with 2, enumeration budget violations with 3, numeric failures with 4.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A parameter or configuration value violates a documented precondition.
class InvalidParameterError : public Error {
 public:
  using Error::Error;
};

// An exhaustive enumeration would exceed the configured budget.  The message
// always names the offending subset count so the caller can see how far over
// budget the request was.
class BudgetError : public Error {
 public:
  using Error::Error;
};

// A numeric computation produced an unusable value (overflow, NaN where a
// finite value is required, failed convergence guarantee).
class NumericError : public Error {
 public:
  using Error::Error;
};

// Requested a well depth whose reference region has zero probability mass;
// the quantity is undefined rather than infinite.
class UndefinedDepthError : public InvalidParameterError {
 public:
  using InvalidParameterError::InvalidParameterError;
};

}  // namespace spca
