#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace spcc {

// Every failure the library reports derives from Error so the CLI can map
// them to per-item failures without catching std::exception wholesale.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A parameter outside its quantized or real domain.
class RangeError : public Error {
 public:
  RangeError(std::string parameter, const std::string& message)
      : Error(parameter + ": " + message), parameter_(std::move(parameter)) {}

  const std::string& parameter() const { return parameter_; }

 private:
  std::string parameter_;
};

// Bad character sequence in code text. Line and column are 1-based.
class LexicalError : public Error {
 public:
  LexicalError(std::size_t line, std::size_t column, std::string token,
               const std::string& message)
      : Error("line " + std::to_string(line) + ", column " + std::to_string(column) +
              ": " + message + " near '" + token + "'"),
        line_(line),
        column_(column),
        token_(std::move(token)) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }
  const std::string& token() const { return token_; }

 private:
  std::size_t line_;
  std::size_t column_;
  std::string token_;
};

// Well-formed tokens in an invalid arrangement (undefined references,
// annotation/component count mismatch, ...).
class StructuralError : public Error {
 public:
  using Error::Error;
};

// A model that fails static validation; carries every violation.
class ValidationError : public StructuralError {
 public:
  ValidationError(const std::string& message, std::vector<std::string> violations)
      : StructuralError(message), violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

class EmptinessError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

// Raised by service clients once retries are exhausted.
class ServiceError : public Error {
 public:
  using Error::Error;
};

// Malformed reply from a service; carries the raw text for the audit log.
class ResponseParseError : public Error {
 public:
  ResponseParseError(const std::string& message, std::string raw)
      : Error(message), raw_(std::move(raw)) {}

  const std::string& raw() const { return raw_; }

 private:
  std::string raw_;
};

}  // namespace spcc
