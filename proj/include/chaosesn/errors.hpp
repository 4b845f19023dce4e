#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace chaosesn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument value or shape.
class ArgumentError : public Error {
public:
  using Error::Error;
};

/// Non-finite input to a mathematical function.
class DomainError : public Error {
public:
  using Error::Error;
};

/// Operation called on an object in the wrong state (e.g. readout before training).
class StateError : public Error {
public:
  using Error::Error;
};

/// Malformed file or document.
class ParseError : public Error {
public:
  using Error::Error;
};

/// Invalid experiment configuration.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Base for numeric failures (integration, convergence, divergence, singular solves).
class NumericError : public Error {
public:
  using Error::Error;
};

class IntegrationError : public NumericError {
public:
  IntegrationError(const std::string& what, double last_good_time)
      : NumericError(what), last_good_time_(last_good_time) {}
  double last_good_time() const { return last_good_time_; }

private:
  double last_good_time_;
};

class ConvergenceError : public NumericError {
public:
  ConvergenceError(const std::string& what, double best_estimate)
      : NumericError(what), best_estimate_(best_estimate) {}
  double best_estimate() const { return best_estimate_; }

private:
  double best_estimate_;
};

class SolverError : public NumericError {
public:
  using NumericError::NumericError;
};

/// Autonomous prediction left the configured bound.
class DivergenceError : public NumericError {
public:
  DivergenceError(const std::string& what, std::size_t steps_completed)
      : NumericError(what), steps_completed_(steps_completed) {}
  std::size_t steps_completed() const { return steps_completed_; }

private:
  std::size_t steps_completed_;
};

}  // namespace chaosesn
