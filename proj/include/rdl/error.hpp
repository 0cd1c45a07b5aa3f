#pragma once

#include <stdexcept>
#include <string>

namespace rdl {

/// Error categories map one-to-one onto CLI exit codes.
enum class ErrorKind { config = 2, numerical = 3, resource = 4 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, std::string field = {})
      : std::runtime_error(what), kind_(kind), field_(std::move(field)) {}

  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }
  /// Dotted path of the offending input, when one is known.
  const std::string& field() const noexcept { return field_; }

 private:
  ErrorKind kind_;
  std::string field_;
};

/// Bad parameters, violated preconditions, unsupported cases.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what, std::string field = {})
      : Error(ErrorKind::config, what, std::move(field)) {}
};

class DomainError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error(ErrorKind::numerical, what) {}
};

class ResourceError : public Error {
 public:
  explicit ResourceError(const std::string& what)
      : Error(ErrorKind::resource, what) {}
};

}  // namespace rdl
