#pragma once

#include <stdexcept>
#include <string>

namespace mee {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or violated call precondition (bad sizes, bad
// hyper-parameters, unknown enum strings, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Incompatible matrix/vector shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Malformed or unusable input data (CSV parse failures, missing columns,
// non-finite feature values, ...).
class IngestError : public Error {
 public:
  using Error::Error;
};

// Training-loop failures: non-finite losses or gradients, impossible
// batch arrangements.
class TrainingError : public Error {
 public:
  using Error::Error;
};

// Numerical routine failed to converge or produced garbage.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Evaluation on an unusable set (e.g. empty test split).
class EvalError : public Error {
 public:
  using Error::Error;
};

// Filesystem trouble while reading or writing artifacts.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace mee
