#pragma once

#include <Eigen/Core>

#include "sfa/params.hpp"

// Closed-form densities of the normal / folded-normal frontier model and the
// analytic derivatives in rho_u.  Everything here is a pure function of
// (observation, parameters); the dataset-level vectorized evaluator lives in
// loglik.hpp.

namespace sfa {

// Per-observation intermediate quantities.  Notation, for control functions
// eta and t = C^-1 D^-1 eta:
//   omega = eps - sigma_v rho_v' t
//   zeta  = g(z,delta) sigma_u rho_u' t
//   xi    = zeta / (lambda sigma)
//   Psi   = Phi(xi - lambda omega / sigma)
//           + Phi(-xi - lambda omega / sigma) exp(2 omega zeta / sigma^2)
// with sigma_tilde_u^2 = sigma_u^2 g^2 (1 - rho_u' C^-1 rho_u),
// sigma_tilde_v^2 = sigma_v^2 (1 - rho_v' C^-1 rho_v),
// lambda = sigma_tilde_u / sigma_tilde_v and sigma^2 the sum of the two.
struct CompositeTerms {
  double eps = 0.0;
  double g = 1.0;
  double sigma_tilde_u = 0.0;
  double sigma_tilde_v = 0.0;
  double lambda = 0.0;
  double sigma = 0.0;
  double omega = 0.0;
  double zeta = 0.0;
  double xi = 0.0;
  double psi = 0.0;      // exp(log_psi); underflows to 0 only in extreme tails
  double log_psi = 0.0;  // the numerically reliable form
  Eigen::VectorXd eta;
  Eigen::VectorXd c_inv_d_inv_eta;  // t above, reused by score and efficiency
};

// Default scaling map exp(z'delta); satisfies g(0,delta) = 1.
double scaling_g(const Eigen::VectorXd& z, const Eigen::VectorXd& delta);

// Conditional density of the baseline inefficiency U0 given eta: folded
// normal with location sigma_u rho_u' C^-1 D^-1 eta and squared scale
// sigma_u^2 (1 - rho_u' C^-1 rho_u).
double folded_normal_cond_pdf(double u, const Eigen::VectorXd& eta,
                              const ParamVector& p);

CompositeTerms composite_terms(const Observation& obs, const ParamVector& p,
                               const Model& m);

// log f_{eps|eta}: -log sigma(Z) + log phi((omega+zeta)/sigma) + log Psi,
// with Psi assembled branch-wise in log space.
double eps_cond_logpdf(const CompositeTerms& ct);

// Multivariate normal log-density of eta with covariance D C D.
double eta_logpdf(const Eigen::VectorXd& eta, const ParamVector& p);

// Full-information contribution of one observation.
double obs_loglik(const Observation& obs, const ParamVector& p, const Model& m);

// Closed-form gradient of obs_loglik with respect to rho_u.  Identically a
// zero vector (bitwise) at rho_u = 0.
Eigen::VectorXd score_rho_u(const CompositeTerms& ct, const ParamVector& p);

// Closed-form second derivative in rho_u at rho_u = 0; throws
// ContractViolation when p.rho_u != 0.  Output is exactly symmetric.
Eigen::MatrixXd hessian_rho_u_at_zero(const CompositeTerms& ct,
                                      const ParamVector& p);

namespace unchecked {
// Bypasses only the rho_u[0] >= 0 sign normalization; all other feasibility
// constraints are still enforced.  Used by the sign-symmetry checks.
CompositeTerms composite_terms(const Observation& obs, const ParamVector& p,
                               const Model& m);
double obs_loglik(const Observation& obs, const ParamVector& p, const Model& m);
}  // namespace unchecked

}  // namespace sfa
