#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qsdkit {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or invalid network description. Line and column are 1-based.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " +
              what),
        line_(line),
        column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Invalid window, or a state outside the explored window.
class WindowError : public Error {
 public:
  using Error::Error;
};

/// A falling-factorial product exceeded the representable range.
class SaturationError : public Error {
 public:
  using Error::Error;
};

/// A state needed for a sound answer could not be classified inside the window.
class UnknownStateError : public Error {
 public:
  using Error::Error;
};

class InconclusiveError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

}  // namespace qsdkit
