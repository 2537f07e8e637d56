#pragma once

#include <stdexcept>
#include <string>

namespace compound {

/// Invalid argument to a library call (bad distribution, malformed matrix, ...).
class ArgumentError : public std::invalid_argument {
 public:
  explicit ArgumentError(const std::string& what) : std::invalid_argument(what) {}
};

/// Malformed or inconsistent experiment configuration. CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// An iterative numeric routine failed to converge within its budget.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, double lower, double upper)
      : std::runtime_error(what), best_lower(lower), best_upper(upper) {}
  double best_lower;
  double best_upper;
};

/// A runtime cap was exceeded (runaway session). CLI exit code 3.
class RunawayError : public std::runtime_error {
 public:
  explicit RunawayError(const std::string& what) : std::runtime_error(what) {}
};

/// Request exceeds a documented capability bound of an exact method. CLI exit code 4.
class CapabilityError : public std::runtime_error {
 public:
  explicit CapabilityError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace compound
