#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

// Unconstrained minimizers used by the fitter: a Nelder-Mead polish for
// robustness on the flat rho_u ridge, then BFGS with central-difference
// gradients.  Objectives may return +inf (feasibility barrier); both methods
// back away from such points.

namespace sfa {

using Objective = std::function<double(const Eigen::VectorXd&)>;

struct OptimResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int iterations = 0;
  int evaluations = 0;
  double grad_norm = 0.0;
  bool converged = false;
  std::vector<double> accepted;  // objective value at each accepted iterate
};

struct NelderMeadOptions {
  int max_evaluations = 2000;
  double initial_step = 0.25;
  double f_tolerance = 1e-10;
  double x_tolerance = 1e-10;
};

struct BfgsOptions {
  int max_iterations = 500;
  double grad_tolerance = 1e-6;
  double fd_step = 1e-6;
  int max_line_search = 50;
};

OptimResult nelder_mead(const Objective& f, const Eigen::VectorXd& x0,
                        const NelderMeadOptions& opts = {});

OptimResult bfgs(const Objective& f, const Eigen::VectorXd& x0,
                 const BfgsOptions& opts = {});

// Central-difference gradient with per-coordinate step h*max(1,|x_j|).
Eigen::VectorXd fd_gradient(const Objective& f, const Eigen::VectorXd& x,
                            double h);

// Central-difference Hessian with caller-supplied per-coordinate steps.
Eigen::MatrixXd fd_hessian(const Objective& f, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& steps);

}  // namespace sfa
