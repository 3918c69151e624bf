#pragma once

#include <stdexcept>
#include <string>

namespace bandshift {

// Every failure raised by the library derives from Error. The CLI maps the
// concrete type to an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input: malformed config, violated preconditions, invalid parameters.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class DegenerateLatticeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class EmptyBasisError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// p_max does not cover every band that can reach the requested energy.
class BandTruncationError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class OutOfWindowError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// The ball inclusions around the strong-coupling core fail at this h.
class HTooLargeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class BoxTooSmallError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ResolutionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class InsufficientDataError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

// A band is degenerate where a simple eigenvalue was required.
class DegeneracyError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SpectralBoundError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace bandshift
