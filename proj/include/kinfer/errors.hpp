#pragma once

#include <stdexcept>
#include <string>

namespace kinfer {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A kernel or test function returned a non-finite value.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

// The integrated trajectory left the a-priori radius bound by a wide margin.
class BlowUpError : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

// Problem too large for the exact solver that was requested.
class SizeError : public Error {
 public:
  using Error::Error;
};

class AssemblyError : public Error {
 public:
  using Error::Error;
};

// Bad caller input: malformed config, violated precondition.
class InputError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace kinfer
