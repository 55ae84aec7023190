#pragma once

#include <stdexcept>
#include <string>

namespace microloc {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dimension of an argument does not match what the operation needs.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Two objects live on different grids.
class GridMismatchError : public Error {
 public:
  using Error::Error;
};

/// A construction precondition failed (bad parameters, vanishing guard, ...).
class ConstructionError : public Error {
 public:
  using Error::Error;
};

/// An experiment refused to run because a stated hypothesis does not hold.
/// The CLI maps this to exit code 3.
class HypothesisError : public Error {
 public:
  using Error::Error;
};

/// Configuration parse or schema validation failure. CLI exit code 2.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg, int line = -1)
      : Error(line >= 0 ? "line " + std::to_string(line) + ": " + msg : msg),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_ = -1;
};

}  // namespace microloc
