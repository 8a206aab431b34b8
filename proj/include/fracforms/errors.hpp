#pragma once

#include <stdexcept>
#include <string>

namespace fracforms {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed expression or form text. `position` is a byte offset into the input.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " at position " + std::to_string(position)), position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// A value lies outside the domain of the requested operation
/// (Gamma pole, negative base under a fractional power, exponent <= -1, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The operation is well defined but deliberately not implemented for this input.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// A self-check inside the library failed; never a user error.
class VerificationError : public Error {
 public:
  using Error::Error;
};

}  // namespace fracforms
