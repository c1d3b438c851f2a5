#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>
#include <vector>

#include "sfa/errors.hpp"

namespace sfa {

// Constraint slack: rho' C^-1 rho >= 1 - kFeasibilityMargin is treated as
// infeasible so conditional variances stay bounded away from zero.
inline constexpr double kFeasibilityMargin = 1e-9;

// Full parameter vector of the frontier model with endogenous regressors.
// Dimensions: beta is whatever the frontier map consumes (1 + px for the
// default linear frontier with intercept), delta has one entry per
// environmental variable, and everything indexed by the control functions
// (rho_v, rho_u, gamma columns, d_eta, c_eta_lower) has dimension
// d = number of endogenous coordinates.
struct ParamVector {
  Eigen::VectorXd beta;
  Eigen::VectorXd delta;
  double sigma2_v = 1.0;
  double sigma2_u = 1.0;
  Eigen::VectorXd rho_v;
  Eigen::VectorXd rho_u;
  Eigen::MatrixXd gamma;        // q x d, one column per endogenous coordinate
  Eigen::VectorXd d_eta;        // control-function standard deviations
  Eigen::VectorXd c_eta_lower;  // strict lower triangle of C_eta, column-major

  int d() const { return static_cast<int>(rho_u.size()); }

  // Correlation matrix rebuilt from the packed lower triangle (unit diagonal).
  Eigen::MatrixXd c_eta() const;

  // Covariance of the control functions, D C D.
  Eigen::MatrixXd sigma_eta() const;
};

Eigen::VectorXd pack_lower_triangle(const Eigen::MatrixXd& c);
Eigen::MatrixXd unpack_lower_triangle(const Eigen::VectorXd& packed, int d);

struct Feasibility {
  bool ok = true;
  std::string reason;
  explicit operator bool() const { return ok; }
};

// Checks every ParamVector invariant.  `require_sign_normalization` gates the
// rho_u[0] >= 0 restriction; the sign-symmetry tests disable it through the
// unchecked entry points.
Feasibility check_feasible(const ParamVector& p,
                           bool require_sign_normalization = true);

// Throwing form used by the density operations.
void require_feasible(const ParamVector& p,
                      bool require_sign_normalization = true);

struct Observation {
  double y = 0.0;
  Eigen::VectorXd x;  // frontier regressors (no intercept column)
  Eigen::VectorXd z;  // environmental variables
  Eigen::VectorXd w;  // instruments, including a leading intercept column
};

using FrontierFn =
    std::function<double(const Eigen::VectorXd& x, const Eigen::VectorXd& beta)>;
using ScalingFn =
    std::function<double(const Eigen::VectorXd& z, const Eigen::VectorXd& delta)>;

// Which of an observation's coordinates are endogenous.  source 0 points into
// x, source 1 into z; entry 0 carries the sign normalization of rho_u.
struct EndoRef {
  int source = 0;
  int col = 0;
  bool operator==(const EndoRef&) const = default;
};

// Layout plus pluggable frontier/scaling maps.  Null maps select the default
// linear-with-intercept frontier and exp(z'delta) scaling.
struct Model {
  int px = 0;  // frontier regressors
  int kz = 0;  // environmental variables
  int q = 0;   // instruments (including intercept column)
  std::vector<EndoRef> endo;
  FrontierFn frontier;
  ScalingFn scaling;

  int d() const { return static_cast<int>(endo.size()); }

  double frontier_value(const Eigen::VectorXd& x, const Eigen::VectorXd& beta) const;
  double scaling_value(const Eigen::VectorXd& z, const Eigen::VectorXd& delta) const;

  // Values of the endogenous coordinates of one observation, in eta order.
  Eigen::VectorXd endo_values(const Observation& obs) const;

  // eta = endogenous values - gamma' w.
  Eigen::VectorXd eta(const Observation& obs, const ParamVector& p) const;
};

// Checks that p's dimensions are consistent with the model layout.
void check_dims(const ParamVector& p, const Model& m);

}  // namespace sfa
