#pragma once

#include <stdexcept>
#include <string>

namespace cemb {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dimension or width mismatch between operands.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// An operation was called without the state it depends on (e.g. backward
/// without a forward cache).
class StateError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values where finite ones are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

class EmptyClassError : public Error {
 public:
  using Error::Error;
};

class NoGenuinePairsError : public Error {
 public:
  using Error::Error;
};

class UnsupportedHeadError : public Error {
 public:
  using Error::Error;
};

class TrainingDivergedError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed text input; the message names the offending line.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Well-formed input that violates a data contract (label out of range,
/// model/dataset width mismatch).
class SchemaError : public Error {
 public:
  using Error::Error;
};

class StratificationError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

/// A pipeline stage was requested before the artifacts it needs exist.
class DependencyError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint bytes that do not follow the CEMB layout.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace cemb
