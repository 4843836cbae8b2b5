#pragma once

#include <stdexcept>
#include <string>

namespace privlens {

// Each error family maps onto one CLI exit code (see cli/commands.hpp).

/// Invalid configuration, usage, or input contract. Exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File system or codec failure. Exit code 3.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite objective or other numerical breakdown. Exit code 4.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace privlens
