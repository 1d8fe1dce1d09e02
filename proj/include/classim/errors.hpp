#pragma once

#include <stdexcept>
#include <string>

namespace classim {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument is outside its documented domain (visibility > 1, non-prime d, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A structural invariant is violated: non-Hermitian matrix, incomplete POVM,
/// mismatched dimensions.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// A matrix that must be positive semidefinite has a negative eigenvalue.
class NegativityError : public StructuralError {
 public:
  using StructuralError::StructuralError;
};

/// Input is valid but outside what an operation supports (e.g. higher-rank
/// elements where rank-1 ones are required).
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// Malformed JSON or text input.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// LP/SDP solver did not reach a certified optimum.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Enumeration would exceed a hard size limit.
class GuardError : public Error {
 public:
  using Error::Error;
};

}  // namespace classim
