#pragma once

#include <stdexcept>
#include <string>

namespace hmit {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file or record.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A value violates a type invariant or an operation precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

/// Stale version or a segment locked by a running job.
class ConflictError : public Error {
 public:
  using Error::Error;
};

/// Failure inside an agent backend. `transient` failures are retried.
class BackendError : public Error {
 public:
  BackendError(const std::string& what, bool transient)
      : Error(what), transient_(transient) {}
  bool transient() const noexcept { return transient_; }

 private:
  bool transient_;
};

}  // namespace hmit
