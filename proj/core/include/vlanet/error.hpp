#pragma once

#include <stdexcept>
#include <string>

namespace vlanet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not conform for an operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A binary file (features, checkpoint) is malformed.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A manifest or dataset is inconsistent.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or argument value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Training diverged or could not proceed.
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace vlanet
