#pragma once

#include <stdexcept>
#include <string>

namespace repcalc {

/// Caller violated a contract: bad dimensions, invalid parameters, malformed input.
class UsageError : public std::invalid_argument {
 public:
  explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

/// A well-formed computation could not produce a trustworthy number
/// (NaN at a quadrature node, non-converged integral, degenerate measure change).
class ComputationError : public std::runtime_error {
 public:
  explicit ComputationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace repcalc
