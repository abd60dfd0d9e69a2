#pragma once

#include <stdexcept>
#include <string>

namespace svem {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed factor/term configuration.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// Value outside a declared range, unknown level, negative sample for a
// positive-support family, ...
class DomainError : public Error {
 public:
  using Error::Error;
};

class SingularSystemError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, int index = -1)
      : Error(what), index_(index) {}
  // Path step (e.g. lambda index) at which convergence failed, or -1.
  int index() const noexcept { return index_; }

 private:
  int index_;
};

// Input carries no information (zero spread, all-zero reference matrix).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

class InfeasibleBoundsError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class IngestionError : public Error {
 public:
  using Error::Error;
};

}  // namespace svem
