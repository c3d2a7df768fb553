#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace subflow {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument's value was violated (off-manifold point,
/// negative time, non-unit vector, ...).
class DomainError : public Error {
public:
  using Error::Error;
};

class UnsupportedModel : public Error {
public:
  using Error::Error;
};

class NotBracketGenerating : public Error {
public:
  using Error::Error;
};

class UnsupportedOperation : public Error {
public:
  using Error::Error;
};

/// Grid too large for dense spectral work.
class CapacityError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

/// Collects every violation found while validating a configuration.
class ConfigError : public Error {
public:
  explicit ConfigError(std::vector<std::string> violations)
      : Error(join(violations)), violations_(std::move(violations)) {}

  const std::vector<std::string> &violations() const { return violations_; }

private:
  static std::string join(const std::vector<std::string> &v) {
    std::string out = "invalid configuration:";
    for (const auto &s : v)
      out += "\n  " + s;
    return out;
  }

  std::vector<std::string> violations_;
};

} // namespace subflow
