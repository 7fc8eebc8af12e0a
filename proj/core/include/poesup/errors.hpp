#pragma once

#include <stdexcept>
#include <string>

namespace poesup {

/// Bad user input: missing or malformed files, invalid configuration values.
/// The command-line tool maps this family to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File system failure while reading or writing.
class IoError : public InputError {
 public:
  using InputError::InputError;
};

/// Operand shapes do not agree.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A NaN or Inf showed up where only finite values are allowed.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace poesup
