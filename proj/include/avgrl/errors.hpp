#pragma once

#include <stdexcept>
#include <string>

namespace avgrl {

// Numerical failures map to CLI exit code 3, configuration problems to 2.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Induced chain is reducible or periodic.
class ErgodicityError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class SolverError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class MixingTimeoutError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class DimensionError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// MDP document violates a TabularMDP invariant or the JSON schema.
class ValidationError : public ConfigError {
public:
  using ConfigError::ConfigError;
};

}  // namespace avgrl
