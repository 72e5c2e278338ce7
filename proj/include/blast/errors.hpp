#pragma once

#include <stdexcept>
#include <string>

namespace blast {

/// Invalid user-supplied data or configuration (bad dimensions, non-finite
/// entries, out-of-range parameters). Maps to CLI exit code 1.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

/// Failure inside a numerical routine (factorization breakdown, indefinite
/// matrix). Maps to CLI exit code 2.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace blast
