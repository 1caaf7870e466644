#pragma once

#include <stdexcept>
#include <string>

namespace lrmt {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad arguments or configuration supplied by the caller.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data (corpus files, vocabularies, checkpoints).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values during training or inference.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace lrmt
