#pragma once

#include <stdexcept>
#include <string>

namespace symbatch {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file; the message names the offending line.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Invalid parameters or an inconsistent experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain where a formula is defined.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An iterative method hit its iteration cap.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_value)
      : Error(what), last_value_(last_value) {}

  double last_value() const noexcept { return last_value_; }

 private:
  double last_value_;
};

/// An optimizer produced a non-finite iterate.
class DivergenceError : public Error {
 public:
  DivergenceError(double h, unsigned long long iteration)
      : Error("iterate became non-finite at h=" + std::to_string(h) +
              ", iteration " + std::to_string(iteration)),
        h_(h),
        iteration_(iteration) {}

  double stepsize() const noexcept { return h_; }
  unsigned long long iteration() const noexcept { return iteration_; }

 private:
  double h_;
  unsigned long long iteration_;
};

/// File could not be opened or written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace symbatch
