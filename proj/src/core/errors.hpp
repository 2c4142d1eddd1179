#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mu2opt {

/// Base of every error raised by the core library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration, caught before any compute starts.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Non-finite value where a finite one is required.
class NumericError : public Error {
 public:
  NumericError(const std::string& what, std::ptrdiff_t coordinate = -1)
      : Error(what), coordinate_(coordinate) {}
  std::ptrdiff_t coordinate() const noexcept { return coordinate_; }

 private:
  std::ptrdiff_t coordinate_;
};

/// Malformed external dataset; carries the 1-based line number.
class IngestionError : public Error {
 public:
  IngestionError(const std::string& what, std::size_t line)
      : Error(what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A diagnostic was requested that the problem cannot supply.
class DiagnosticUnavailable : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace mu2opt
