#pragma once

#include <stdexcept>
#include <string>

namespace ssnpmm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Raised by the Cholesky factorization when a pivot is not strictly positive.
class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

/// Raised by the LDL^T factorization on a zero or non-finite pivot.
class FactorizationBreakdown : public Error {
 public:
  using Error::Error;
};

/// The preconditioner produced a nonpositive inner product inside MINRES.
class PreconditionerBreakdown : public Error {
 public:
  using Error::Error;
};

/// Dense diagnostics refuse to run above their size guard.
class TooLarge : public Error {
 public:
  using Error::Error;
};

}  // namespace ssnpmm
