#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace acmptc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration value or range (min > max, n_paths = 0, unknown key, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Caller supplied an argument outside the operation's precondition.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Argument outside a formula's mathematical domain (division by zero, p outside (0,1)).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// No feasible allocation exists (all modeled throughputs are zero).
class AllocationError : public Error {
 public:
  using Error::Error;
};

/// A network or bundle dimension does not match what the caller expected.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite parameter.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// A file or stream could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace acmptc
