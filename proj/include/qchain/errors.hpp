#pragma once

#include <stdexcept>
#include <string>

namespace qchain {

/// Bad run configuration (CLI maps this to exit code 2).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A numerical assertion failed mid-run, e.g. a Gaussian width went
/// non-positive. Carries enough context (time, mode/site) to locate the
/// failure. CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qchain
