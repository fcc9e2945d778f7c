#pragma once

#include <stdexcept>
#include <string>

namespace llp {

/// Shapes of operands do not line up.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A hyper-parameter or argument is outside its admissible range.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An API was called in a state where it is not meaningful.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// NaN or Inf produced by a forward computation.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input file. Carries the 1-based line number
/// when the problem is tied to a line (0 otherwise).
class LoadError : public std::runtime_error {
 public:
  LoadError(const std::string& path, std::size_t line, const std::string& what)
      : std::runtime_error(path + (line ? ":" + std::to_string(line) : std::string()) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Request cannot be satisfied with the available candidates.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Metric is undefined for the given input (e.g. no positives).
class MetricError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace llp

namespace llp {

/// Unknown key or unparsable value in a run configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A pipeline stage was run before the artifacts it needs exist.
class PrerequisiteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace llp
