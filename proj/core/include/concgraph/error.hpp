#pragma once

#include <stdexcept>
#include <string>

namespace concgraph {

/// Failure classes. The CLI maps each to its own exit code.
enum class ErrorKind {
  config = 3,
  io = 4,
  domain = 5,
  undecodable = 6,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

/// Precondition or data-shape violation (index out of range, size mismatch, ...).
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorKind::domain, what) {}
};

}  // namespace concgraph
