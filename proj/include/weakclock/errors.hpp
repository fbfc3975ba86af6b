#pragma once

#include <stdexcept>
#include <string>

namespace weakclock {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter lies outside the documented domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Inputs where a closed form divides by zero or changes character.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// A size or memory guard refused the request before any work was done.
class GuardError : public Error {
 public:
  using Error::Error;
};

/// An internal consistency check on a numerical result failed.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace weakclock
