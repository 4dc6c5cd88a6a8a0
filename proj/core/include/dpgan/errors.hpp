#pragma once

#include <stdexcept>
#include <string>

namespace dpgan {

/// Invalid argument values or inconsistent shapes.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or missing input files. `what()` names the file (and line when known).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable/unwritable paths.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Run configuration rejected during validation. Carries the offending field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dpgan
