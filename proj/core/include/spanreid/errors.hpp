#pragma once

#include <stdexcept>
#include <string>

namespace spanreid {

// Error taxonomy mirrored by the CLI exit codes:
//   ConfigError -> 2, IoError -> 3, NumericError -> 4.
// Precondition violations on library entry points throw std::invalid_argument
// (treated as usage errors, exit 2).

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace spanreid
