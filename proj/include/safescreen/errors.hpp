#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace safescreen {

/// Malformed input data or files. Maps to CLI exit code 1.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// The dual coordinate ascent did not reach the KKT tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double worst_violation)
      : std::runtime_error(what), worst_violation_(worst_violation) {}

  double worst_violation() const noexcept { return worst_violation_; }

 private:
  double worst_violation_;
};

/// Geometry that cannot happen for an exact reference solution: negative
/// squared radius, disjoint balls, a non-positive C_min denominator.
/// Maps to CLI exit code 3.
class NumericalInconsistency : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The ε-path search could not certify any C above the previous one.
class StepCollapse : public std::runtime_error {
 public:
  StepCollapse(const std::string& what, double gap)
      : std::runtime_error(what), gap_(gap) {}

  double gap() const noexcept { return gap_; }

 private:
  double gap_;
};

}  // namespace safescreen
