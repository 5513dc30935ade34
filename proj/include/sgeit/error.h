#ifndef SGEIT_ERROR_H_
#define SGEIT_ERROR_H_

#include <stdexcept>
#include <string>

namespace sgeit {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: parse failures, violated preconditions, broken invariants.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A computation failed: factorization breakdown, non-convergence.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace sgeit

#endif  // SGEIT_ERROR_H_
