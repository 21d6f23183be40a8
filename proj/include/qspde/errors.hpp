#pragma once

#include <stdexcept>
#include <string>

namespace qspde {

// Base for all solver-facing failures.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad user input: config values, invalid exponents, empty bases.
class InvalidArgument : public Error {
public:
  explicit InvalidArgument(const std::string& what) : Error(what) {}
};

// Operator calculus failures: singular snapshot, spectrum in the wrong
// half-plane, exponential overflow.
class CalculusError : public Error {
public:
  explicit CalculusError(const std::string& what) : Error(what) {}
};

// An integrand callback asked for trajectory values past its prefix.
class NonAdaptedAccess : public Error {
public:
  explicit NonAdaptedAccess(const std::string& what) : Error(what) {}
};

}  // namespace qspde
