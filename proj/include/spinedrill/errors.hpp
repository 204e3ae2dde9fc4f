#pragma once

#include <stdexcept>
#include <string>

namespace spinedrill {

/// Input outside an operation's mathematical domain (non-finite HU, rho <= 0, s out of range, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Operation called with an argument combination it does not support.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Voxel or node index outside the grid.
class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Invalid configuration/spec object (phantom spec, candidate space, batch file).
class SpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// FE model could not be assembled (empty load/clamp sets, overlapping sets).
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Iterative solve failed or system is singular.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, int iterations, double relative_residual)
      : std::runtime_error(what), iterations_(iterations), relative_residual_(relative_residual) {}

  int iterations() const noexcept { return iterations_; }
  double relative_residual() const noexcept { return relative_residual_; }

 private:
  int iterations_;
  double relative_residual_;
};

/// Every candidate trajectory was rejected.
class PlanningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace spinedrill
