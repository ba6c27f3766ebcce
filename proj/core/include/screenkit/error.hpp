#pragma once

#include <stdexcept>
#include <string>

namespace screenkit {

// Base of every error the toolkit raises. The CLI maps all of these to exit
// code 2 (input or configuration error).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unsupported or malformed image / file encoding.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Input violates a documented precondition or schema.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A curve (ROC / PR) cannot be drawn, e.g. only one class is present.
class CurveUndefinedError : public Error {
 public:
  using Error::Error;
};

// Too little data for a statistic (e.g. Bland-Altman with n < 2).
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

// Degenerate input to a closed-form interval (|r| = 1, n < 4).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

// Resampling produced no usable replicate.
class InferenceError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace screenkit
