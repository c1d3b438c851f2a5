#pragma once

#include "sfa/dataset.hpp"
#include "sfa/density.hpp"

namespace sfa {

// Ingredients of the conditional law of U given (eps, eta): a two-branch
// mixture of normals truncated to [0, inf) with means mu1* +/- mu2*, common
// scale sigma*, and branch weights w1 = Phi(a)/Psi, w2 = 1 - w1.
struct EfficiencyTerms {
  double lambda_star = 0.0;  // sqrt(1 + lambda^2)
  double sigma_star = 0.0;   // sigma_tilde_v sigma_tilde_u / sigma
  double mu1_star = 0.0;     // -omega sigma_tilde_u^2 / sigma^2
  double mu2_star = 0.0;     // zeta sigma_tilde_v^2 / sigma^2
  double w1 = 0.0;
  double w2 = 0.0;
  double log_w1 = 0.0;
  double log_w2 = 0.0;
};

EfficiencyTerms efficiency_terms(const CompositeTerms& ct);

// Conditional density of U given (eps, eta) at u >= 0.
double cond_u_density(double u, const CompositeTerms& ct, const ParamVector& p);

struct EfficiencyResult {
  Eigen::VectorXd scores;  // E[exp(-U) | eps, eta] per observation, in (0,1)
  double mean_te = 0.0;
};

// Battese-Coelli scores for every observation at the given parameters; the
// Phi ratios are evaluated in log space so deep-tail observations stay
// inside (0,1) instead of collapsing to 0/0.
EfficiencyResult efficiency_scores(const Dataset& ds, const Model& model,
                                   const ParamVector& p);

// Population mean technical efficiency of the marginal half-normal
// benchmark: 2 exp(sigma2_u / 2) Phi(-sigma_u).
double half_normal_mean_te(double sigma2_u);

}  // namespace sfa
