#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace uavplan {

/// Invalid argument or violated precondition.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed scenario text. `line()` is 1-based, or 0 when the problem is not
/// tied to a single line (e.g. a missing key).
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// The requested allocation cannot satisfy its constraints (power cap, RB budget, zero dwell).
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative solver stopped without meeting its tolerance.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual_norm)
      : std::runtime_error(what), residual_norm_(residual_norm) {}

  double residual_norm() const noexcept { return residual_norm_; }

 private:
  double residual_norm_;
};

/// Wraps a failure from one pipeline stage and records which stage raised it.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace uavplan
