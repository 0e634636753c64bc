#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace maxk {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text; carries the 1-based line number when known.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t line = 0)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class BoundsError : public Error {
  using Error::Error;
};

/// Truncated binary input.
class LengthError : public Error {
  using Error::Error;
};

class DimensionError : public Error {
  using Error::Error;
};

class NumericError : public Error {
  using Error::Error;
};

/// Gradient pattern does not match the pattern recorded in forward.
class PatternError : public Error {
  using Error::Error;
};

/// Edge-group plan does not describe the graph it is used with.
class PlanError : public Error {
  using Error::Error;
};

/// Operation called in the wrong state, e.g. backward before forward.
class StateError : public Error {
  using Error::Error;
};

class ParameterError : public Error {
  using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
  using Error::Error;
};

class IoError : public Error {
  using Error::Error;
};

}  // namespace maxk
