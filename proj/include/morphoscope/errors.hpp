#pragma once

#include <stdexcept>
#include <string>

namespace morphoscope {

// Base class for all library errors. The CLI maps subclasses onto exit
// codes: user/spec errors exit 2, environment/data errors exit 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --- user/spec errors (exit 2) ---

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

class UnknownAttribute : public Error {
 public:
  using Error::Error;
};

class InvalidTag : public Error {
 public:
  using Error::Error;
};

class TooLarge : public Error {
 public:
  using Error::Error;
};

class DegenerateSplit : public Error {
 public:
  using Error::Error;
};

class InvalidSpec : public Error {
 public:
  using Error::Error;
};

// --- environment/data errors (exit 1) ---

class FormatError : public Error {
 public:
  using Error::Error;
};

class ConsistencyError : public Error {
 public:
  using Error::Error;
};

// Bad value inside an otherwise well-formed file; carries the row it was
// found at.
class DataError : public Error {
 public:
  DataError(const std::string& what, long long row) : Error(what), row_(row) {}
  long long row() const { return row_; }

 private:
  long long row_;
};

}  // namespace morphoscope
