#pragma once

#include <stdexcept>
#include <string>

namespace pcinit {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A forward pass produced a non-finite activation.
class NumericOverflow : public Error {
 public:
  NumericOverflow(int layer, const std::string& what)
      : Error("layer " + std::to_string(layer) + ": " + what), layer_(layer) {}
  int layer() const { return layer_; }

 private:
  int layer_;
};

/// The z estimate of a layer is unusable (all neighborhoods empty or z ~ 0).
class DegenerateEstimate : public Error {
 public:
  DegenerateEstimate(int layer, const std::string& what)
      : Error("layer " + std::to_string(layer) + ": " + what), layer_(layer) {}
  int layer() const { return layer_; }

 private:
  int layer_;
};

/// Experiment configuration failed validation. `field()` names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace pcinit
