#pragma once

#include <stdexcept>
#include <string>

namespace pbart {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed text input (tables, config, model files). Carries the 1-based
/// line number when one applies, 0 otherwise.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error(key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// Wire-level violations: unknown opcode, bad payload length, out-of-order
/// replies. Always fatal for the run.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// A peer went away or a socket operation failed.
class TransportError : public Error {
 public:
  using Error::Error;
};

}  // namespace pbart
