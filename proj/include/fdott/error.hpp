#pragma once

#include <stdexcept>
#include <string>

namespace fdott {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent user input (bad masses, dimension mismatch, bad flags).
class InputError : public Error {
 public:
  using Error::Error;
};

/// A linear program or transport solve did not reach a certified optimum.
class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace fdott
