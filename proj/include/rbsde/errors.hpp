#pragma once

#include <stdexcept>
#include <string>

namespace rbsde {

/// Input violates a documented precondition (bad grid, barrier ordering,
/// terminal mismatch, malformed scenario file).
class ScenarioError : public std::runtime_error {
 public:
  explicit ScenarioError(const std::string& what) : std::runtime_error(what) {}
};

/// A numerical routine failed to meet its contract (root finder out of
/// budget, martingale check rejected, iteration limit reached).
class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace rbsde
