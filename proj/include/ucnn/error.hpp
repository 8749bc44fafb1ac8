#pragma once

#include <stdexcept>
#include <string>

namespace ucnn {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A document (case file, config, archive) does not match its schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// A structurally valid object breaks a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// An operation was called outside its precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// The LP core could not continue without risking a wrong answer.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// An artifact was built against a different grid case.
class FingerprintError : public Error {
 public:
  using Error::Error;
};

class MissingArtifactError : public Error {
 public:
  using Error::Error;
};

/// Train and test sets share samples.
class DisjointnessError : public Error {
 public:
  using Error::Error;
};

}  // namespace ucnn
