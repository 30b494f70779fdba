#pragma once

#include <stdexcept>
#include <string>

namespace robshrink {

// Base for every error thrown by the library. The CLI maps the concrete
// subclasses onto exit codes.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Caller supplied something outside an operation's domain.
class InvalidInput : public Error {
public:
  using Error::Error;
};

// The backend eigensolver or Cholesky factorization did not succeed.
class DecompositionError : public Error {
public:
  using Error::Error;
};

// A guarded quantity (denominator, radicand) left its admissible range.
class NumericalError : public Error {
public:
  using Error::Error;
};

// Estimator called in a regime it does not support (e.g. Tyler with p > n).
class UnsupportedRegime : public Error {
public:
  using Error::Error;
};

// Inputs are valid individually but make the requested quantity undefined.
class DegenerateInput : public Error {
public:
  using Error::Error;
};

// Iteration hit its budget. `residual` is the last measured stopping value.
class NonConvergence : public Error {
public:
  NonConvergence(const std::string &what, int iterations, double residual)
      : Error(what), iterations_(iterations), residual_(residual) {}

  int iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }

private:
  int iterations_;
  double residual_;
};

} // namespace robshrink
