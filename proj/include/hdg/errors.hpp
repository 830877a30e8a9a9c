#pragma once

#include <stdexcept>
#include <string>

namespace hdg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class GraphError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values produced by a numeric primitive.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class TapeError : public Error {
 public:
  using Error::Error;
};

/// ODE solve failed (step budget exhausted, step size underflow).
class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, double reached_time)
      : Error(what), reached_time_(reached_time) {}
  double reached_time() const { return reached_time_; }

 private:
  double reached_time_;
};

class DataError : public Error {
 public:
  using Error::Error;
};

/// Malformed text input; carries the 1-based line number.
class ParseError : public DataError {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& msg)
      : DataError(file + ":" + std::to_string(line) + ": " + msg), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace hdg
