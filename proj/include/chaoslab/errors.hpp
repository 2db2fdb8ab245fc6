#pragma once

#include <stdexcept>
#include <string>

namespace chaoslab {

// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Precondition violated by an argument (r <= 0, unresolved mollifier, ...).
class DomainError : public Error {
public:
  using Error::Error;
};

// Invalid or inconsistent experiment configuration. `field` names the offending key.
class ConfigError : public Error {
public:
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

// Scheme failure at run time: NaN, CFL breach, unrecoverable negativity.
class NumericalError : public Error {
public:
  using Error::Error;
};

}  // namespace chaoslab
