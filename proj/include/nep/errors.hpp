#pragma once

#include <stdexcept>
#include <string>

namespace nep {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Mismatched field/lattice/vector sizes, out-of-range site indices.
class DimensionError : public Error {
public:
  using Error::Error;
};

// Bad user-facing configuration (negative g, malformed targets, ...).
class ConfigError : public Error {
public:
  using Error::Error;
};

// Relaxation produced non-finite values.
class DivergenceError : public Error {
public:
  DivergenceError(const std::string& msg, long step)
      : Error(msg + " (step " + std::to_string(step) + ")"), step(step) {}
  long step;
};

// Finite-difference oracle could not produce a trustworthy reference.
class OracleError : public Error {
public:
  using Error::Error;
};

// Malformed IDX files.
class IdxError : public Error {
public:
  using Error::Error;
};

}  // namespace nep
