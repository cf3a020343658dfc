#pragma once

#include <stdexcept>
#include <string>

namespace fishforge {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration: bad spec values, malformed JSON, bad CLI overrides.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Filesystem or codec failure.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Mathematical precondition violated (zero-norm vector, non-normalized
/// distribution) or a computation produced a non-finite value.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Patch synthesis gave up after its bounded retries.
class GenerationError : public Error {
 public:
  using Error::Error;
};

}  // namespace fishforge
