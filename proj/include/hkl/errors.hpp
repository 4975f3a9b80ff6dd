#pragma once

#include <stdexcept>
#include <string>

namespace hkl {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

/// A monotone search never crossed the requested level.
class BracketError : public Error {
 public:
  using Error::Error;
};

/// A numerically checked inequality failed. Carries the witness.
class ViolationError : public Error {
 public:
  ViolationError(const std::string& what, double witness, double ratio)
      : Error(what), witness_(witness), ratio_(ratio) {}
  double witness() const noexcept { return witness_; }
  double ratio() const noexcept { return ratio_; }

 private:
  double witness_;
  double ratio_;
};

class QuadratureError : public Error {
 public:
  using Error::Error;
};

class InconclusiveError : public Error {
 public:
  using Error::Error;
};

/// Envelope constants produce lower > upper.
class SpecError : public Error {
 public:
  using Error::Error;
};

class ResourceError : public Error {
 public:
  using Error::Error;
};

class SolveError : public Error {
 public:
  using Error::Error;
};

class TabulationError : public Error {
 public:
  using Error::Error;
};

/// Bad experiment configuration. The message names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error(key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace hkl
