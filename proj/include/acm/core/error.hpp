#pragma once

#include <stdexcept>
#include <string>

namespace acm {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape or dimension mismatch between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Index outside the valid range (class id, paragraph index, token id).
class IndexError : public Error {
 public:
  using Error::Error;
};

/// A NaN or infinity appeared in a computation.
class NumericError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or missing input data.
class DataError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace acm
