#pragma once

#include <stdexcept>
#include <string>

namespace scorekit {

// Raised when a perturbation kernel collapses (marginal std below the
// representable floor) and a transition score or Tweedie factor is requested.
class DegenerateTransitionError : public std::runtime_error {
 public:
  explicit DegenerateTransitionError(const std::string& what)
      : std::runtime_error(what) {}
};

// Raised by the adaptive integrator when the step budget is exhausted before
// reaching the requested endpoint.
class StiffnessError : public std::runtime_error {
 public:
  explicit StiffnessError(const std::string& what)
      : std::runtime_error(what) {}
};

// Raised when a loss or state stops being finite during iterative work.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what)
      : std::runtime_error(what) {}
};

// Raised for malformed configuration: unknown keys, out-of-range values,
// checkpoint/config layout mismatches.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Raised for unreadable/unwritable files and malformed binary payloads.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when an operation is not defined for the given variant, e.g. exact
// log densities of datasets that only exist as samples.
class UnsupportedError : public std::logic_error {
 public:
  explicit UnsupportedError(const std::string& what)
      : std::logic_error(what) {}
};

}  // namespace scorekit
