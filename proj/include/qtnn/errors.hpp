#pragma once

#include <stdexcept>
#include <string>

namespace qtnn {

// Every failure raised by the library derives from Error. The CLI maps the
// "input" family to exit code 1 and the "numerical" family to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public InputError {
 public:
  using InputError::InputError;
};

class DomainError : public InputError {
 public:
  using InputError::InputError;
};

class FormatError : public InputError {
 public:
  using InputError::InputError;
};

class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class SingularityError : public NumericalError {
 public:
  SingularityError(const std::string& what, std::size_t pivot)
      : NumericalError(what), pivot_(pivot) {}
  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace qtnn
