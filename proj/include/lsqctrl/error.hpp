#pragma once

#include <stdexcept>
#include <string>

namespace lsqctrl {

/// Malformed or inconsistent input (dimension mismatch, invalid grid, bad data).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A linear or nonlinear solve failed to meet its accuracy contract.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Energy increased along an exact line-search step: a gradient or metric bug.
class DivergenceError : public SolverError {
 public:
  using SolverError::SolverError;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw InputError(what);
}

}  // namespace detail
}  // namespace lsqctrl
