#include "sfa/loglik.hpp"

#include <cmath>

#include "sfa/stats.hpp"

namespace sfa {

DatasetLoglik::DatasetLoglik(const Dataset& ds, Model model)
    : ds_(&ds), model_(std::move(model)) {
  const int n = ds.n();
  endo_ = Eigen::MatrixXd(n, model_.d());
  for (int j = 0; j < model_.d(); ++j) {
    const auto& e = model_.endo[j];
    endo_.col(j) = e.source == 0 ? ds.x.col(e.col) : ds.z.col(e.col);
  }
  eps_.resize(n);
  g_.resize(n);
  omega_.resize(n);
  bu_.resize(n);
}

void DatasetLoglik::fix_first_stage(const ParamVector& p) {
  const int d = model_.d();
  if (d == 0) {
    fs_fixed_ = true;
    return;
  }
  fs_llt_.compute(p.c_eta());
  if (fs_llt_.info() != Eigen::Success)
    throw InfeasibleParameter("fix_first_stage: C_eta not positive definite");
  if (!(p.d_eta.minCoeff() > 0.0))
    throw InfeasibleParameter("fix_first_stage: d_eta must be positive");
  const Eigen::MatrixXd eta = endo_ - ds_->w * p.gamma;
  const Eigen::MatrixXd s = eta * p.d_eta.cwiseInverse().asDiagonal();
  fs_t_ = fs_llt_.solve(s.transpose()).transpose();
  fs_eta_quad_ = (s.array() * fs_t_.array()).rowwise().sum();
  const double log_det_c =
      2.0 * fs_llt_.matrixL().toDenseMatrix().diagonal().array().log().sum();
  fs_eta_const_ = -p.d_eta.array().log().sum() - 0.5 * log_det_c -
                  0.5 * d * kLogTwoPi;
  fs_fixed_ = true;
}

void DatasetLoglik::clear_first_stage() { fs_fixed_ = false; }

double DatasetLoglik::loglik(const ParamVector& p) { return eval(p, nullptr); }

double DatasetLoglik::loglik(const ParamVector& p, Eigen::VectorXd& per_obs) {
  per_obs.resize(ds_->n());
  return eval(p, &per_obs);
}

double DatasetLoglik::eval(const ParamVector& p, Eigen::VectorXd* per_obs) {
  const int n = ds_->n();
  const int d = model_.d();
  check_dims(p, model_);

  if (!(p.sigma2_v > 0.0) || !std::isfinite(p.sigma2_v)) return kNegInf;
  if (!(p.sigma2_u > 0.0) || !std::isfinite(p.sigma2_u)) return kNegInf;
  if (!p.beta.allFinite() || !p.delta.allFinite()) return kNegInf;

  double qu = 0.0, qv = 0.0;
  const Eigen::LLT<Eigen::MatrixXd>* llt = nullptr;
  Eigen::LLT<Eigen::MatrixXd> local_llt;
  if (d > 0) {
    if (!p.rho_u.allFinite() || !p.rho_v.allFinite()) return kNegInf;
    if (enforce_sign_ && p.rho_u[0] < 0.0) return kNegInf;
    if (fs_fixed_) {
      llt = &fs_llt_;
    } else {
      if (!p.gamma.allFinite() || !p.c_eta_lower.allFinite() ||
          !p.d_eta.allFinite() || !(p.d_eta.minCoeff() > 0.0))
        return kNegInf;
      local_llt.compute(p.c_eta());
      if (local_llt.info() != Eigen::Success) return kNegInf;
      llt = &local_llt;
    }
    qu = p.rho_u.dot(llt->solve(p.rho_u));
    qv = p.rho_v.dot(llt->solve(p.rho_v));
    if (!(qu < 1.0 - kFeasibilityMargin) || !(qv < 1.0 - kFeasibilityMargin))
      return kNegInf;
  }

  // Residuals from the frontier and the scaling factor.
  if (!model_.frontier) {
    eps_ = ds_->y.array() - p.beta[0];
    eps_.noalias() -= ds_->x * p.beta.tail(model_.px);
  } else {
    for (int i = 0; i < n; ++i)
      eps_[i] = ds_->y[i] - model_.frontier(ds_->x.row(i).transpose(), p.beta);
  }
  if (!model_.scaling) {
    g_ = (ds_->z * p.delta).array().exp();
  } else {
    for (int i = 0; i < n; ++i)
      g_[i] = model_.scaling(ds_->z.row(i).transpose(), p.delta);
  }

  const Eigen::MatrixXd* t_mat = nullptr;
  const Eigen::VectorXd* eta_quad = nullptr;
  double eta_const = 0.0;
  if (d > 0) {
    if (fs_fixed_) {
      t_mat = &fs_t_;
      eta_quad = &fs_eta_quad_;
      eta_const = fs_eta_const_;
    } else {
      eta_scratch_ = endo_ - ds_->w * p.gamma;
      const Eigen::MatrixXd s = eta_scratch_ * p.d_eta.cwiseInverse().asDiagonal();
      t_scratch_ = llt->solve(s.transpose()).transpose();
      quad_scratch_ = (s.array() * t_scratch_.array()).rowwise().sum();
      const double log_det_c =
          2.0 * llt->matrixL().toDenseMatrix().diagonal().array().log().sum();
      eta_const = -p.d_eta.array().log().sum() - 0.5 * log_det_c -
                  0.5 * d * kLogTwoPi;
      t_mat = &t_scratch_;
      eta_quad = &quad_scratch_;
    }
    const double sigma_v = std::sqrt(p.sigma2_v);
    omega_ = eps_ - sigma_v * (*t_mat * p.rho_v);
    bu_ = *t_mat * p.rho_u;  // rho_u' C^-1 D^-1 eta_i, one entry per row
  } else {
    omega_ = eps_;
    bu_.setZero(n);
  }

  const double stv2 = p.sigma2_v * (1.0 - qv);
  const double stv = std::sqrt(stv2);
  const double su_cond = std::sqrt(p.sigma2_u * (1.0 - qu));
  const double su2_cond = su_cond * su_cond;
  const double sigma_u = std::sqrt(p.sigma2_u);
  const double root_one_minus_qu = su_cond / sigma_u;

  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = g_[i];
    const double stu2 = su2_cond * g * g;
    const double sigma2 = stv2 + stu2;
    const double sigma = std::sqrt(sigma2);
    const double om = omega_[i];
    const double ze = g * sigma_u * bu_[i];
    // xi = zeta / (lambda sigma); the scaling factors cancel algebraically,
    // which keeps xi finite even when g underflows.
    const double xi = bu_[i] * stv / (root_one_minus_qu * sigma);
    const double lam_om = su_cond * g * om / (stv * sigma);
    const double lpa = log_norm_cdf(xi - lam_om);
    const double lpb = log_norm_cdf(-xi - lam_om);
    const double c_exp = 2.0 * om * ze / sigma2;
    const double lpsi = log_sum_exp(lpa, lpb + c_exp);
    const double t = om + ze;
    double li = -0.5 * std::log(sigma2) - 0.5 * t * t / sigma2 + lpsi -
                0.5 * kLogTwoPi;
    if (d > 0) li += -0.5 * (*eta_quad)[i] + eta_const;
    if (per_obs) (*per_obs)[i] = li;
    total += li;
  }
  if (std::isnan(total)) return kNegInf;
  return total;
}

}  // namespace sfa
