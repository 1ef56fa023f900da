#pragma once

#include <stdexcept>
#include <string>

namespace mmslice {

// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Trace ingestion failures. The kind lets callers tell a corrupt header
// from a short file or a NaN payload.
class LoadError : public Error {
 public:
  enum class Kind { Io, BadMagic, BadVersion, MalformedHeader, Truncated, NonFinite };

  LoadError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

// Invalid user-supplied configuration. `field` names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

// Zero-norm channel vector where a correlation is requested.
class UndefinedCorrelationError : public Error {
 public:
  using Error::Error;
};

// More streams than antennas.
class OversubscriptionError : public Error {
 public:
  using Error::Error;
};

// Unregularized Gram matrix too ill-conditioned to invert.
class SingularChannelError : public Error {
 public:
  using Error::Error;
};

// A scheduler cannot run at the requested scale (combinatorial caps,
// size guards, search budgets) or the instance has no feasible answer.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

}  // namespace mmslice
