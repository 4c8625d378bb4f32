#pragma once

#include <stdexcept>
#include <string>

namespace sarcaps {

/// Raised when operand shapes are incompatible with an operation.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a forward computation produces NaN or Inf.
class NumericError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised on malformed files (tiles, manifests, checkpoints).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sarcaps
