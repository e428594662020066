#pragma once

#include <stdexcept>
#include <string>

namespace vbrp {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A documented precondition of an operation does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Text that could not be parsed; `position` is the 0-based offset of the failure.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " at position " + std::to_string(position)), position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// A configured size or refinement cap would be exceeded.
class ResourceError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure failed its own convergence diagnostics.
class DiagnosticError : public Error {
 public:
  using Error::Error;
};

/// Invalid experiment configuration.
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace vbrp
