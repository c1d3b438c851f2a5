#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sfa/dataset.hpp"
#include "sfa/first_stage.hpp"
#include "sfa/transform.hpp"

namespace sfa {

struct FitOptions {
  FitMode mode = FitMode::EndoFull;
  bool two_stage = true;  // fix (gamma, d_eta, c_eta) at the OLS values
  int max_iterations = 500;
  double gradient_tolerance = 1e-6;  // on the mean log-likelihood scale
  int multistart_count = 3;
  std::uint64_t rng_seed = 0;
  Eigen::VectorXd rho_u_fixed;         // for FitMode::EndoRhoUFixed
  std::optional<ParamVector> start;    // explicit start disables multistart
  bool simplex_polish = true;          // Nelder-Mead before BFGS
  int nm_max_evaluations = 0;          // 0: 150 * dim
};

struct FitResult {
  ParamVector theta;
  double loglik = 0.0;  // sum over observations
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;
  std::optional<Eigen::VectorXd> se;  // in flatten() order, filled by wald_se
  std::optional<std::vector<std::array<double, 2>>> ci;
  std::string notes;
  std::vector<double> accepted_loglik;  // non-decreasing along the winning path
  FitMode mode = FitMode::EndoFull;
  bool two_stage = true;
  int n = 0;
};

// Conditional mean of the baseline inefficiency given the control functions
// (folded-normal mean); used for method-of-moments starting values.
double conditional_mean_u0(const Eigen::VectorXd& eta, const ParamVector& p);

// Method-of-moments starting values: beta from OLS of y on (X, eta), sigma2_u
// from the residual skewness (floored at 1e-3 when the skewness has the wrong
// sign), (sigma2_v, rho_v) from the residual second moments against eta,
// delta = 0 and rho_u = 0.05 on the normalized coordinate.  The result always
// satisfies the ParamVector invariants.
ParamVector starting_values(const Dataset& ds, const FirstStage& stage1,
                            const Model& model);

// Exogenous counterpart (no control functions).
ParamVector starting_values_exogenous(const Dataset& ds, const Model& model);

FitResult fit_mle(const Dataset& ds, const Model& model, const FitOptions& opts);

// Convenience overload building the model from the dataset layout.
FitResult fit_mle(const Dataset& ds, const FitOptions& opts);

}  // namespace sfa
