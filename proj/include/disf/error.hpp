#pragma once

#include <stdexcept>
#include <string>

namespace disf {

// Base for every error raised by the library. The CLI maps subclasses onto
// its exit codes (argument/format errors -> 2, I/O -> 3).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class TruncationError : public FormatError {
 public:
  using FormatError::FormatError;
};

class MismatchError : public FormatError {
 public:
  using FormatError::FormatError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Raised when an exhaustive computation would exceed its size guard.
class RefusalError : public Error {
 public:
  using Error::Error;
};

// Raised when a ratio-style score has a zero denominator.
class UndefinedScoreError : public Error {
 public:
  using Error::Error;
};

}  // namespace disf
