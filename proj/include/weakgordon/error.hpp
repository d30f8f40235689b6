#pragma once

#include <stdexcept>
#include <string>

namespace wg {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter lies outside the domain of the requested operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure could not reach the requested tolerance.
class ToleranceError : public Error {
 public:
  using Error::Error;
};

/// A configured resource budget (bits, nodes, samples) would be exceeded.
class ResourceError : public Error {
 public:
  using Error::Error;
};

/// The result is not representable in the closed measure class.
class RepresentationError : public Error {
 public:
  using Error::Error;
};

}  // namespace wg
