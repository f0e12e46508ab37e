#pragma once

#include <stdexcept>
#include <string>

namespace cdimc {

// Every failure raised by the library derives from Error. The CLI maps the
// concrete categories onto distinct exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not conform.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf where a finite value is required, or a diverging loss.
class NumericError : public Error {
 public:
  using Error::Error;
};

// A precondition of an operation was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Bad hyper-parameter, mask spec or run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent data on disk or in memory.
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace cdimc
