#pragma once

#include <stdexcept>
#include <string>

namespace simofdm {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration (bad field values, unsupported sizes).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Caller passed data of the wrong shape or length.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A received/constructed frame does not decode to a valid codeword.
class DecodeError : public Error {
 public:
  using Error::Error;
};

/// Singular matrices, rank loss, non-finite intermediate results.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace simofdm
