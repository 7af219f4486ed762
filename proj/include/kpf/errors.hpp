#pragma once

#include <stdexcept>
#include <string>

namespace kpf {

/// Base of every error the library throws.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Shapes that do not agree with each other or with the declared Dims.
class DimensionError : public Error {
public:
  using Error::Error;
};

/// An argument outside its documented range.
class ArgumentError : public Error {
public:
  using Error::Error;
};

/// A numerical kernel failed (non-convergence, non-PD covariance, ...).
class NumericError : public Error {
public:
  using Error::Error;
};

/// X^T X is (numerically) singular.
class SingularDesignError : public NumericError {
public:
  SingularDesignError(const std::string& what, double rcond)
      : NumericError(what), rcond_(rcond) {}
  double rcond() const noexcept { return rcond_; }

private:
  double rcond_;
};

/// A broken internal invariant (e.g. a likelihood ascent that descended).
class InternalError : public Error {
public:
  using Error::Error;
};

/// Malformed input files.
class InputError : public Error {
public:
  using Error::Error;
};

/// Malformed experiment configuration.
class ConfigError : public Error {
public:
  using Error::Error;
};

}  // namespace kpf
