#pragma once

#include <stdexcept>
#include <string>

namespace wsiflow {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition on an argument does not hold (bad size, wrong channel count, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Malformed or truncated file contents.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Two inputs that must agree (labels vs. object records, ...) do not.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

// A propagation rule produced an update that does not improve the target cell.
class NonMonotoneRule : public Error {
 public:
  using Error::Error;
};

}  // namespace wsiflow
