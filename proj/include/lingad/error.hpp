#pragma once

#include <stdexcept>
#include <string>

namespace lingad {

/// Bad or inconsistent input data (malformed files, invariant violations).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on arguments was violated by the caller.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace lingad
