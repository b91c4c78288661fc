#pragma once

#include <stdexcept>
#include <string>

namespace pseudolidar {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed binary or image container (bad length, bad header, bad sample).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Malformed text record (calibration, label, config).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain of a mathematical operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An evaluation found nothing to average over (no valid pixel, no ground
/// truth in the difficulty class).
class EmptySetError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Incompatible tensor / grid shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// File system failure.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Violated object invariant (non-orthonormal rotation, bad config, ...).
class InvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace pseudolidar
