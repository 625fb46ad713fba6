#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace lfdeblur {

/// Bad inputs, inconsistent configuration, malformed files. CLI exit code 1.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure at runtime (divergence, degenerate projection). CLI exit code 2.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

/// PSF footprint exceeds the configured support cap; carries the radius that would fit.
class SupportOverflowError : public ValidationError {
 public:
  SupportOverflowError(const std::string& msg, int required)
      : ValidationError(msg), required_radius(required) {}
  int required_radius;
};

class DegenerateKernelError : public NumericalError {
 public:
  explicit DegenerateKernelError(const std::string& msg) : NumericalError(msg) {}
};

class DivergenceError : public NumericalError {
 public:
  explicit DivergenceError(const std::string& msg, std::vector<double> trace = {})
      : NumericalError(msg), energy_trace(std::move(trace)) {}
  std::vector<double> energy_trace;
};

}  // namespace lfdeblur
