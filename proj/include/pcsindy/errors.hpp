#pragma once

#include <stdexcept>
#include <string>

namespace pcsindy {

// Invalid configuration or input data. Maps to CLI exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failure during simulation, power flow or fitting. Maps to exit code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pcsindy
