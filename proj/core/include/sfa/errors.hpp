#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace sfa {

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Mismatched vector/matrix dimensions between inputs.
struct DimensionError : Error {
  using Error::Error;
};

// Parameter vector violates the feasibility constraints (positive variances,
// positive-definite correlation matrix, rho' C^-1 rho < 1, sign restriction).
struct InfeasibleParameter : Error {
  using Error::Error;
};

// Rank-deficient design (collinear instruments, singular W'W).
struct SingularDesign : Error {
  using Error::Error;
};

// An operation was called outside its contract (e.g. closed-form Hessian
// requested away from rho_u = 0).
struct ContractViolation : Error {
  using Error::Error;
};

// Numeric Hessian at the fit is singular or not negative definite; carries
// the eigenvalue report of -H.
struct DegenerateCurvature : Error {
  DegenerateCurvature(const std::string& what, Eigen::VectorXd eigenvalues)
      : Error(what), eigenvalues(std::move(eigenvalues)) {}
  Eigen::VectorXd eigenvalues;
};

// Too many subsample refits failed; carries the failure fraction.
struct UnreliableInference : Error {
  UnreliableInference(const std::string& what, double failure_fraction)
      : Error(what), failure_fraction(failure_fraction) {}
  double failure_fraction;
};

}  // namespace sfa
