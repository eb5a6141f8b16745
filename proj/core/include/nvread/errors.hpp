#pragma once

#include <stdexcept>
#include <string>

namespace nvread {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input that violates a documented precondition or data invariant.
/// The command-line front end maps these to exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class NonPhysicalConfig : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DimensionMismatch : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ParseError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class MissingRecord : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Numerical failures.
class EslacNotInRange : public Error {
 public:
  using Error::Error;
};

class RankDeficientBasis : public Error {
 public:
  using Error::Error;
};

class SingularSystem : public Error {
 public:
  using Error::Error;
};

class ZeroVector : public Error {
 public:
  using Error::Error;
};

class DegenerateLevels : public Error {
 public:
  using Error::Error;
};

class DegenerateFit : public Error {
 public:
  using Error::Error;
};

class TargetUnreachable : public Error {
 public:
  using Error::Error;
};

}  // namespace nvread
