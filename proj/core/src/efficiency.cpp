#include "sfa/efficiency.hpp"

#include <cmath>

#include "sfa/stats.hpp"

namespace sfa {

EfficiencyTerms efficiency_terms(const CompositeTerms& ct) {
  EfficiencyTerms t;
  t.lambda_star = std::sqrt(1.0 + ct.lambda * ct.lambda);
  t.sigma_star = ct.sigma_tilde_v * ct.sigma_tilde_u / ct.sigma;
  const double sigma2 = ct.sigma * ct.sigma;
  t.mu1_star = -ct.omega * ct.sigma_tilde_u * ct.sigma_tilde_u / sigma2;
  t.mu2_star = ct.zeta * ct.sigma_tilde_v * ct.sigma_tilde_v / sigma2;
  const double lam_om = ct.lambda * ct.omega / ct.sigma;
  const double c_exp = 2.0 * ct.omega * ct.zeta / sigma2;
  t.log_w1 = log_norm_cdf(ct.xi - lam_om) - ct.log_psi;
  t.log_w2 = log_norm_cdf(-ct.xi - lam_om) + c_exp - ct.log_psi;
  t.w1 = std::exp(t.log_w1);
  t.w2 = std::exp(t.log_w2);
  return t;
}

double cond_u_density(double u, const CompositeTerms& ct, const ParamVector& p) {
  require_feasible(p, false);
  if (u < 0.0) throw ContractViolation("cond_u_density: u must be >= 0");
  const EfficiencyTerms t = efficiency_terms(ct);
  const double m1 = t.mu1_star + t.mu2_star;
  const double m2 = t.mu1_star - t.mu2_star;
  const double s = t.sigma_star;
  const double b1 = t.log_w1 - log_norm_cdf(m1 / s) + norm_logpdf((u - m1) / s);
  const double b2 = t.log_w2 - log_norm_cdf(m2 / s) + norm_logpdf((u - m2) / s);
  return std::exp(log_sum_exp(b1, b2)) / s;
}

namespace {

// E[exp(-U) | eps, eta] from the truncated-normal mixture, branch-wise in
// log space: log w_i - m_i + s^2/2 + log Phi(m_i/s - s) - log Phi(m_i/s).
double te_score(const EfficiencyTerms& t) {
  const double s = t.sigma_star;
  const double m1 = t.mu1_star + t.mu2_star;
  const double m2 = t.mu1_star - t.mu2_star;
  const double half_s2 = 0.5 * s * s;
  const double b1 =
      t.log_w1 - m1 + half_s2 + log_norm_cdf(m1 / s - s) - log_norm_cdf(m1 / s);
  const double b2 =
      t.log_w2 - m2 + half_s2 + log_norm_cdf(m2 / s - s) - log_norm_cdf(m2 / s);
  double te = std::exp(log_sum_exp(b1, b2));
  // Keep the open interval under rounding.
  if (te >= 1.0) te = 1.0 - 1e-16;
  if (te <= 0.0) te = 1e-300;
  return te;
}

}  // namespace

EfficiencyResult efficiency_scores(const Dataset& ds, const Model& model,
                                   const ParamVector& p) {
  require_feasible(p, false);
  const int n = ds.n();
  EfficiencyResult out;
  out.scores.resize(n);
  for (int i = 0; i < n; ++i) {
    const CompositeTerms ct = unchecked::composite_terms(ds.row(i), p, model);
    out.scores[i] = te_score(efficiency_terms(ct));
  }
  out.mean_te = out.scores.mean();
  return out;
}

double half_normal_mean_te(double sigma2_u) {
  if (!(sigma2_u > 0.0))
    throw ContractViolation("half_normal_mean_te: sigma2_u must be positive");
  const double sigma_u = std::sqrt(sigma2_u);
  return std::exp(std::log(2.0) + 0.5 * sigma2_u + log_norm_cdf(-sigma_u));
}

}  // namespace sfa
