#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace coinft {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (range, sign, shape).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Cross product of (near-)parallel vectors, or a zero-length direction.
class DegenerateOrientation : public Error {
 public:
  using Error::Error;
};

/// Load outside the mechanical or electrical range of the sensor.
class SaturationError : public Error {
 public:
  using Error::Error;
};

/// Normal-equation system is singular or too few samples were supplied.
class IllConditionedError : public Error {
 public:
  using Error::Error;
};

/// Feature layout of a model does not match the supplied data.
class ChannelMismatch : public Error {
 public:
  using Error::Error;
};

/// Malformed log, model, or config file. Carries the 1-based line number
/// when the failure is tied to one line (0 otherwise).
class FormatError : public Error {
 public:
  enum class Kind { kHeader, kColumnCount, kNumber, kTimestamp, kSchema, kIo };

  FormatError(Kind kind, std::size_t line, const std::string& what)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        kind_(kind),
        line_(line) {}

  Kind kind() const { return kind_; }
  std::size_t line() const { return line_; }

 private:
  Kind kind_;
  std::size_t line_;
};

/// Search band was exhausted without detecting contact.
class SurfaceNotFound : public Error {
 public:
  using Error::Error;
};

}  // namespace coinft
