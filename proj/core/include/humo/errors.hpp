#pragma once

#include <stdexcept>
#include <string>

namespace humo {

// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or inconsistent configuration / input file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Dimension or layout mismatch between values and a model.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Non-finite or otherwise invalid numeric input (e.g. a degenerate rotation).
class NumericError : public Error {
 public:
  using Error::Error;
};

// File-level problems: missing, truncated, wrong version.
class IoError : public Error {
 public:
  using Error::Error;
};

// The integrator produced a non-finite state. Carries the substep index.
class SimDivergedError : public Error {
 public:
  SimDivergedError(const std::string& what, int substep)
      : Error(what), substep_(substep) {}
  int substep() const { return substep_; }

 private:
  int substep_;
};

}  // namespace humo
