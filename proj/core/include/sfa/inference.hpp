#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sfa/fit.hpp"

namespace sfa {

// Standard errors from the inverse negative numeric Hessian of the full
// log-likelihood at the fit, in flatten() order over all coordinates
// (including the first stage, even for two-stage fits).  Throws
// DegenerateCurvature when -H is singular or not positive definite, which is
// the expected outcome when rho_u sits at the boundary.
Eigen::VectorXd wald_se(const Dataset& ds, const Model& model,
                        const FitResult& fit);

struct SubsampleOptions {
  int block_size = 0;     // 0: floor(n^0.95 / ln n)
  int n_subsamples = 0;   // 0: min(500, n)
  double level = 0.95;
  std::uint64_t rng_seed = 0;
  std::uint64_t rng_stream_index = 0;  // distinct replications get distinct streams
  double rate_exponent = 0.5;          // 0.25 for the slow rho_u rate
  int max_refit_iterations = 200;
};

int default_block_size(int n);

struct SubsampleCi {
  std::vector<std::array<double, 2>> intervals;  // flatten() order
  int n_subsamples = 0;
  int failures = 0;
  int block_size = 0;
};

SubsampleCi subsample_ci(const Dataset& ds, const Model& model,
                         const FitResult& fit, const SubsampleOptions& opts);

// argmin over tau >= 0 of (tau - z)' W (tau - z) for symmetric PSD W,
// by active-set nonnegative least squares; exact for the scalar case.
Eigen::VectorXd qp_project_nonneg(const Eigen::VectorXd& z,
                                  const Eigen::MatrixXd& weight);

enum class LrMethod { Chi2, MixtureChi2PointMass, SimulatedQp };

struct LrTestResult {
  double statistic = 0.0;
  std::map<double, double> critical_values;  // level -> critical value
  std::optional<double> p_value;
  LrMethod method = LrMethod::Chi2;
  std::string notes;
  bool reject(double level) const {
    auto it = critical_values.find(level);
    return it != critical_values.end() && statistic > it->second;
  }
};

// Boundary test of rho_u = 0 with critical values simulated from the
// projected-Gaussian limit: per-observation scores in theta_1 stacked with
// the closed-form vech Hessian in rho_u, information from the outer product,
// draws from N(0, pseudo-inverse), each projected onto tau >= 0 under the
// Schur-complement weight.  The simulated functional is
// Q(0) - Q(tau_hat) = Z' W Z - (tau_hat - Z)' W (tau_hat - Z).
LrTestResult lr_test_rho_u_zero(const Dataset& ds, const Model& model,
                                const FitResult& fit_unrestricted,
                                int n_draws = 10000, std::uint64_t seed = 0);

// Interior test of rho_u = r0 against chi-square with p+k degrees of freedom.
LrTestResult lr_test_interior(const Dataset& ds, const Model& model,
                              const FitResult& fit_unrestricted,
                              const Eigen::VectorXd& r0);

// Test of sigma2_u = 0 (no inefficiency): restricted model is a Gaussian
// regression with control functions; critical values from the equal mixture
// of a point mass at 0 and chi-square(1), i.e. c(a) solves P(chi2_1 > c) = 2a.
LrTestResult lr_test_sigma_u_zero(const Dataset& ds, const Model& model,
                                  const FitOptions& opts);

}  // namespace sfa
