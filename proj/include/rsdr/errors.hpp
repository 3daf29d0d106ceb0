#pragma once

#include <stdexcept>
#include <string>

namespace rsdr {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Bad caller input: malformed data, mismatched shapes, unusable files.
/// Maps to CLI exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Invalid data (non-finite entries, mismatched sample counts, bad CSV).
class InputError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Out-of-range or inconsistent configuration values.
class ParameterError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Numerical failure on otherwise valid input (singular covariance,
/// rank-deficient projection).  Maps to CLI exit code 2.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace rsdr
