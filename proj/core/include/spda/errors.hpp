#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spda {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes that do not fit together (patch larger than image, mismatched sizes).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A precondition on an argument value was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A likelihood evaluation produced a non-finite value.
class NumericalOverflow : public Error {
 public:
  NumericalOverflow(const std::string& what, std::size_t patch_index)
      : Error(what + " (patch " + std::to_string(patch_index) + ")"), patch_index_(patch_index) {}

  std::size_t patch_index() const noexcept { return patch_index_; }

 private:
  std::size_t patch_index_;
};

/// An internal invariant failed, e.g. a descent method increased its objective.
class InternalError : public Error {
 public:
  using Error::Error;
};

/// Reading or writing a file failed. The message names the file and, when known, the line.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace spda
