#include "sfa/density.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "sfa/stats.hpp"

namespace sfa {

namespace {

CompositeTerms composite_terms_impl(const Observation& obs, const ParamVector& p,
                                    const Model& m, bool sign_check) {
  require_feasible(p, sign_check);
  check_dims(p, m);

  CompositeTerms ct;
  ct.eps = obs.y - m.frontier_value(obs.x, p.beta);
  ct.g = m.scaling_value(obs.z, p.delta);
  const int d = p.d();

  double qu = 0.0, qv = 0.0, av = 0.0, bu = 0.0;
  if (d > 0) {
    ct.eta = m.eta(obs, p);
    const Eigen::MatrixXd c = p.c_eta();
    Eigen::LLT<Eigen::MatrixXd> llt(c);
    const Eigen::VectorXd s = p.d_eta.cwiseInverse().asDiagonal() * ct.eta;
    ct.c_inv_d_inv_eta = llt.solve(s);
    qu = p.rho_u.dot(llt.solve(p.rho_u));
    qv = p.rho_v.dot(llt.solve(p.rho_v));
    av = p.rho_v.dot(ct.c_inv_d_inv_eta);
    bu = p.rho_u.dot(ct.c_inv_d_inv_eta);
  }

  const double sigma_v = std::sqrt(p.sigma2_v);
  const double sigma_u = std::sqrt(p.sigma2_u);
  ct.sigma_tilde_v = sigma_v * std::sqrt(1.0 - qv);
  ct.sigma_tilde_u = sigma_u * ct.g * std::sqrt(1.0 - qu);
  ct.lambda = ct.sigma_tilde_u / ct.sigma_tilde_v;
  const double sigma2 = ct.sigma_tilde_v * ct.sigma_tilde_v +
                        ct.sigma_tilde_u * ct.sigma_tilde_u;
  ct.sigma = std::sqrt(sigma2);
  ct.omega = ct.eps - sigma_v * av;
  ct.zeta = ct.g * sigma_u * bu;
  ct.xi = ct.zeta / (ct.lambda * ct.sigma);

  const double lam_om = ct.lambda * ct.omega / ct.sigma;
  const double log_phi_a = log_norm_cdf(ct.xi - lam_om);
  const double log_phi_b = log_norm_cdf(-ct.xi - lam_om);
  const double c_exp = 2.0 * ct.omega * ct.zeta / sigma2;
  ct.log_psi = log_sum_exp(log_phi_a, log_phi_b + c_exp);
  ct.psi = std::exp(ct.log_psi);
  return ct;
}

double eps_cond_logpdf_of(const CompositeTerms& ct) {
  const double sigma2 = ct.sigma * ct.sigma;
  const double t = ct.omega + ct.zeta;
  return -0.5 * std::log(sigma2) - 0.5 * t * t / sigma2 + ct.log_psi -
         0.5 * kLogTwoPi;
}

}  // namespace

double scaling_g(const Eigen::VectorXd& z, const Eigen::VectorXd& delta) {
  if (z.size() != delta.size())
    throw DimensionError("scaling_g: z and delta lengths differ");
  return std::exp(z.dot(delta));
}

double folded_normal_cond_pdf(double u, const Eigen::VectorXd& eta,
                              const ParamVector& p) {
  if (u < 0.0) throw ContractViolation("folded_normal_cond_pdf: u must be >= 0");
  require_feasible(p, false);
  if (eta.size() != p.d())
    throw DimensionError("folded_normal_cond_pdf: eta dimension mismatch");
  double mu = 0.0;
  double qu = 0.0;
  if (p.d() > 0) {
    Eigen::LLT<Eigen::MatrixXd> llt(p.c_eta());
    const Eigen::VectorXd t = llt.solve(p.d_eta.cwiseInverse().asDiagonal() * eta);
    mu = std::sqrt(p.sigma2_u) * p.rho_u.dot(t);
    qu = p.rho_u.dot(llt.solve(p.rho_u));
  }
  const double s = std::sqrt(p.sigma2_u * (1.0 - qu));
  return (norm_pdf((u - mu) / s) + norm_pdf((u + mu) / s)) / s;
}

CompositeTerms composite_terms(const Observation& obs, const ParamVector& p,
                               const Model& m) {
  return composite_terms_impl(obs, p, m, true);
}

double eps_cond_logpdf(const CompositeTerms& ct) { return eps_cond_logpdf_of(ct); }

double eta_logpdf(const Eigen::VectorXd& eta, const ParamVector& p) {
  const int d = static_cast<int>(eta.size());
  if (d != p.d()) throw DimensionError("eta_logpdf: eta dimension mismatch");
  if (d == 0) return 0.0;
  if (!(p.d_eta.minCoeff() > 0.0))
    throw InfeasibleParameter("eta_logpdf: d_eta entries must be positive");
  Eigen::LLT<Eigen::MatrixXd> llt(p.c_eta());
  if (llt.info() != Eigen::Success)
    throw InfeasibleParameter("eta_logpdf: C_eta is not positive definite");
  const Eigen::VectorXd s = p.d_eta.cwiseInverse().asDiagonal() * eta;
  const double quad = s.dot(llt.solve(s));
  const double log_det_c =
      2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double log_det_d = p.d_eta.array().log().sum();
  return -0.5 * d * kLogTwoPi - log_det_d - 0.5 * log_det_c - 0.5 * quad;
}

double obs_loglik(const Observation& obs, const ParamVector& p, const Model& m) {
  const CompositeTerms ct = composite_terms(obs, p, m);
  return eps_cond_logpdf_of(ct) + eta_logpdf(ct.eta, p);
}

Eigen::VectorXd score_rho_u(const CompositeTerms& ct, const ParamVector& p) {
  const int d = p.d();
  if (d == 0) return Eigen::VectorXd();
  Eigen::LLT<Eigen::MatrixXd> llt(p.c_eta());
  if (llt.info() != Eigen::Success)
    throw InfeasibleParameter("score_rho_u: C_eta is not positive definite");
  const Eigen::VectorXd cr = llt.solve(p.rho_u);

  const double sigma_u = std::sqrt(p.sigma2_u);
  const double g2su2 = p.sigma2_u * ct.g * ct.g;
  const double sigma2 = ct.sigma * ct.sigma;
  const double sigma4 = sigma2 * sigma2;

  const Eigen::VectorXd grad_sigma2 = -2.0 * g2su2 * cr;
  const Eigen::VectorXd grad_zeta = sigma_u * ct.g * ct.c_inv_d_inv_eta;
  const Eigen::VectorXd grad_lambda =
      -(g2su2 / (ct.sigma_tilde_v * ct.sigma_tilde_u)) * cr;

  const double a = ct.xi - ct.lambda * ct.omega / ct.sigma;
  const double b = -ct.xi - ct.lambda * ct.omega / ct.sigma;
  const double c_exp = 2.0 * ct.omega * ct.zeta / sigma2;
  // Phi(a)/Psi as a logistic of the log branch gap: exact 1/2 at rho_u = 0.
  const double phi_cdf_ratio =
      1.0 / (1.0 + std::exp(log_norm_cdf(b) + c_exp - log_norm_cdf(a)));
  const double phi_pdf_ratio = std::exp(norm_logpdf(a) - ct.log_psi);

  const double zmo = ct.zeta - ct.omega;
  Eigen::VectorXd s = -grad_sigma2 / (2.0 * sigma2);
  s -= (zmo / sigma2) * grad_zeta - (zmo * zmo / (2.0 * sigma4)) * grad_sigma2;
  const Eigen::VectorXd mills_coeff =
      grad_lambda / ct.sigma -
      (ct.lambda / (2.0 * sigma2 * ct.sigma)) * grad_sigma2;
  const Eigen::VectorXd cdf_coeff =
      grad_zeta / sigma2 - (ct.zeta / sigma4) * grad_sigma2;
  s -= 2.0 * ct.omega *
       (phi_pdf_ratio * mills_coeff + phi_cdf_ratio * cdf_coeff);
  return s;
}

Eigen::MatrixXd hessian_rho_u_at_zero(const CompositeTerms& ct,
                                      const ParamVector& p) {
  const int d = p.d();
  if (d == 0) return Eigen::MatrixXd();
  if (!(p.rho_u.array() == 0.0).all())
    throw ContractViolation("hessian_rho_u_at_zero: requires rho_u = 0");
  Eigen::LLT<Eigen::MatrixXd> llt(p.c_eta());
  if (llt.info() != Eigen::Success)
    throw InfeasibleParameter("hessian_rho_u_at_zero: C_eta not positive definite");
  Eigen::MatrixXd c_inv = llt.solve(Eigen::MatrixXd::Identity(d, d));
  c_inv = 0.5 * (c_inv + c_inv.transpose()).eval();

  const double sigma_u = std::sqrt(p.sigma2_u);
  const double stu2 = p.sigma2_u * ct.g * ct.g;  // sigma_tilde_u^2 at rho_u = 0
  const double stv2 = ct.sigma_tilde_v * ct.sigma_tilde_v;
  const double sigma2 = ct.sigma * ct.sigma;
  const double sigma3 = sigma2 * ct.sigma;
  const Eigen::VectorXd grad_zeta = sigma_u * ct.g * ct.c_inv_d_inv_eta;
  const Eigen::MatrixXd gg = grad_zeta * grad_zeta.transpose();

  const double a = -ct.lambda * ct.omega / ct.sigma;
  const double mills = ct.omega * std::exp(norm_logpdf(a) - log_norm_cdf(a));
  const double k1 = 1.0 / sigma2 - ct.omega * ct.omega / (sigma2 * sigma2);

  // d2 lambda / d rho d rho' at 0 is -lambda C^-1; combined with the constant
  // second derivative of sigma^2 this contracts to -lambda stv2 C^-1 / sigma^3.
  Eigen::MatrixXd h = k1 * (stu2 * c_inv - gg);
  h += (mills / sigma3) * (ct.lambda * stv2 * c_inv - gg / ct.lambda);
  return 0.5 * (h + h.transpose()).eval();
}

namespace unchecked {

CompositeTerms composite_terms(const Observation& obs, const ParamVector& p,
                               const Model& m) {
  return composite_terms_impl(obs, p, m, false);
}

double obs_loglik(const Observation& obs, const ParamVector& p, const Model& m) {
  const CompositeTerms ct = composite_terms_impl(obs, p, m, false);
  return eps_cond_logpdf_of(ct) + eta_logpdf(ct.eta, p);
}

}  // namespace unchecked

}  // namespace sfa
