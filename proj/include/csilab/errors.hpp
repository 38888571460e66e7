#pragma once

#include <stdexcept>
#include <string>

namespace csilab {

// Base of every error the library throws.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
public:
  using Error::Error;
};

// A mean photon number in a denominator is zero.
class DegenerateState : public Error {
public:
  using Error::Error;
};

class CutoffTooSmall : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

class SpecError : public Error {
public:
  using Error::Error;
};

class NoPeak : public Error {
public:
  using Error::Error;
};

class DcMissing : public Error {
public:
  using Error::Error;
};

class BandError : public Error {
public:
  using Error::Error;
};

// Malformed or truncated trace container.
class FormatError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

} // namespace csilab
