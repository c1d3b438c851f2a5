#include "sfa/inference.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "sfa/density.hpp"
#include "sfa/loglik.hpp"
#include "sfa/optim.hpp"
#include "sfa/parallel.hpp"
#include "sfa/rng.hpp"
#include "sfa/stats.hpp"

namespace sfa {

namespace {

Eigen::VectorXd hessian_steps(const Eigen::VectorXd& theta) {
  return theta.cwiseAbs().unaryExpr(
      [](double a) { return std::max(1e-5, 1e-4 * a); });
}

// Empirical quantile, inverted-CDF convention.
double empirical_quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const int m = static_cast<int>(v.size());
  int idx = static_cast<int>(std::ceil(p * m)) - 1;
  idx = std::clamp(idx, 0, m - 1);
  return v[static_cast<std::size_t>(idx)];
}

// Moore-Penrose pseudo-inverse with relative eigenvalue clipping; fills
// `clipped` when any eigenvalue was dropped or negative.
Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& m, double rel_tol,
                               bool* clipped = nullptr) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  const Eigen::VectorXd ev = es.eigenvalues();
  const double cut = rel_tol * std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
  Eigen::VectorXd inv = ev;
  bool any_clip = false;
  for (int i = 0; i < ev.size(); ++i) {
    if (ev[i] > cut) {
      inv[i] = 1.0 / ev[i];
    } else {
      inv[i] = 0.0;
      any_clip = true;
    }
  }
  if (clipped) *clipped = any_clip;
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

// vech of a symmetric matrix: column-major lower triangle including diagonal.
Eigen::VectorXd vech(const Eigen::MatrixXd& m) {
  const int d = static_cast<int>(m.rows());
  Eigen::VectorXd v(d * (d + 1) / 2);
  int k = 0;
  for (int j = 0; j < d; ++j)
    for (int i = j; i < d; ++i) v[k++] = m(i, j);
  return v;
}

double restricted_gaussian_loglik(const Dataset& ds, const Model& model,
                                  const ParamVector& stage1_params) {
  // sigma2_u -> 0 limit: y = m(X,beta) + a' eta + N(0, s2), with the eta
  // log-density added so the value is comparable with the full likelihood.
  const int n = ds.n();
  const int d = model.d();
  Eigen::MatrixXd eta(n, d);
  double eta_term = 0.0;
  if (d > 0) {
    eta = ds.endo_matrix() - ds.w * stage1_params.gamma;
    for (int i = 0; i < n; ++i)
      eta_term += eta_logpdf(eta.row(i).transpose(), stage1_params);
  }
  Eigen::MatrixXd design(n, 1 + ds.x.cols() + d);
  design.col(0).setOnes();
  design.middleCols(1, ds.x.cols()) = ds.x;
  if (d > 0) design.rightCols(d) = eta;
  const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(ds.y);
  const double rss = (ds.y - design * coef).squaredNorm();
  const double s2 = rss / n;
  return -0.5 * n * (std::log(s2) + kLogTwoPi + 1.0) + eta_term;
}

}  // namespace

Eigen::VectorXd wald_se(const Dataset& ds, const Model& model,
                        const FitResult& fit) {
  if (!fit.converged) throw Error("wald_se: fit did not converge");
  const ParamVector& theta = fit.theta;
  if (theta.d() > 0 && fit.mode != FitMode::Exogenous &&
      theta.rho_u.norm() == 0.0)
    throw DegenerateCurvature(
        "wald_se: rho_u = 0 gives a singular information matrix (rank "
        "deficiency p+k); use subsampling",
        Eigen::VectorXd());

  DatasetLoglik ll(ds, model);
  ll.set_enforce_sign_normalization(false);
  const Eigen::VectorXd theta0 = flatten(theta);
  auto obj = [&](const Eigen::VectorXd& v) {
    return ll.loglik(unflatten(v, theta));
  };
  const Eigen::MatrixXd h = fd_hessian(obj, theta0, hessian_steps(theta0));
  if (!h.allFinite())
    throw DegenerateCurvature(
        "wald_se: Hessian evaluation left the feasible region",
        Eigen::VectorXd());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(-0.5 * (h + h.transpose()));
  const Eigen::VectorXd ev = es.eigenvalues();
  if (!(ev.minCoeff() > 0.0))
    throw DegenerateCurvature(
        "wald_se: negative Hessian is not positive definite", ev);
  const Eigen::MatrixXd cov = es.eigenvectors() *
                              ev.cwiseInverse().asDiagonal() *
                              es.eigenvectors().transpose();
  return cov.diagonal().cwiseSqrt();
}

int default_block_size(int n) {
  return static_cast<int>(std::floor(std::pow(n, 0.95) / std::log(n)));
}

SubsampleCi subsample_ci(const Dataset& ds, const Model& model,
                         const FitResult& fit, const SubsampleOptions& opts) {
  if (!fit.converged) throw Error("subsample_ci: fit did not converge");
  const int n = ds.n();
  const int b = opts.block_size > 0 ? opts.block_size : default_block_size(n);
  if (!(b > 1 && b <= n))
    throw Error("subsample_ci: block size must satisfy 1 < b <= n");
  const int n_sub = opts.n_subsamples > 0 ? opts.n_subsamples : std::min(500, n);
  if (!(opts.level > 0.0 && opts.level < 1.0))
    throw Error("subsample_ci: level must be in (0,1)");

  const Eigen::VectorXd theta_hat = flatten(fit.theta);
  const int dim = static_cast<int>(theta_hat.size());
  std::vector<Eigen::VectorXd> draws(n_sub);
  std::vector<char> ok(n_sub, 0);

  parallel_for(n_sub, [&](int k) {
    Philox rng(opts.rng_seed, RngStream::kSubsample, opts.rng_stream_index,
               static_cast<std::uint64_t>(k));
    // Partial Fisher-Yates draw of b indices without replacement.
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < b; ++i) {
      const int j = i + static_cast<int>(rng.next_double() * (n - i));
      std::swap(idx[i], idx[std::min(j, n - 1)]);
    }
    idx.resize(b);
    std::sort(idx.begin(), idx.end());
    try {
      const Dataset sub = ds.subset(idx);
      ParamVector warm = fit.theta;
      if (fit.mode != FitMode::Exogenous) {
        const FirstStage s1 = first_stage_ols(sub);
        warm.gamma = s1.gamma;
        warm.d_eta = s1.d_eta.cwiseMax(1e-6);
        warm.c_eta_lower = s1.c_eta_lower;
        if (!check_feasible(warm)) return;  // degenerate subsample
      }
      FitOptions fo;
      fo.mode = fit.mode;
      fo.two_stage = fit.two_stage;
      fo.start = warm;
      fo.simplex_polish = false;
      fo.max_iterations = opts.max_refit_iterations;
      if (fit.mode == FitMode::EndoRhoUFixed) fo.rho_u_fixed = fit.theta.rho_u;
      const FitResult fr = fit_mle(sub, model, fo);
      if (!fr.converged) return;
      draws[k] = flatten(fr.theta);
      ok[k] = 1;
    } catch (const Error&) {
      // counted as a failed refit
    }
  });

  SubsampleCi out;
  out.block_size = b;
  out.n_subsamples = n_sub;
  std::vector<const Eigen::VectorXd*> kept;
  for (int k = 0; k < n_sub; ++k)
    if (ok[k]) kept.push_back(&draws[k]);
  out.failures = n_sub - static_cast<int>(kept.size());
  const double fail_frac = static_cast<double>(out.failures) / n_sub;
  if (fail_frac > 0.20)
    throw UnreliableInference(
        "subsample_ci: more than 20% of subsample refits failed", fail_frac);

  const double rate_b = std::pow(b, opts.rate_exponent);
  const double rate_n = std::pow(n, opts.rate_exponent);
  const double alpha = 1.0 - opts.level;
  out.intervals.resize(dim);
  std::vector<double> scaled(kept.size());
  for (int j = 0; j < dim; ++j) {
    for (std::size_t k = 0; k < kept.size(); ++k)
      scaled[k] = rate_b * ((*kept[k])[j] - theta_hat[j]);
    const double lo_q = empirical_quantile(scaled, alpha / 2.0);
    const double hi_q = empirical_quantile(scaled, 1.0 - alpha / 2.0);
    out.intervals[j] = {theta_hat[j] - hi_q / rate_n, theta_hat[j] - lo_q / rate_n};
  }
  return out;
}

Eigen::VectorXd qp_project_nonneg(const Eigen::VectorXd& z,
                                  const Eigen::MatrixXd& weight) {
  const int m = static_cast<int>(z.size());
  if (weight.rows() != m || weight.cols() != m)
    throw ContractViolation("qp_project_nonneg: dimension mismatch");
  if ((weight - weight.transpose()).cwiseAbs().maxCoeff() >
      1e-8 * std::max(1.0, weight.cwiseAbs().maxCoeff()))
    throw ContractViolation("qp_project_nonneg: weight must be symmetric");
  if (m == 1) return Eigen::VectorXd::Constant(1, std::max(z[0], 0.0));

  // Factor W = A'A through the eigendecomposition (clipping tiny negative
  // eigenvalues), then run Lawson-Hanson NNLS on min ||A tau - A z||.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      0.5 * (weight + weight.transpose()));
  const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  const Eigen::MatrixXd a =
      ev.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
  const Eigen::VectorXd b = a * z;

  Eigen::VectorXd tau = Eigen::VectorXd::Zero(m);
  std::vector<bool> passive(m, false);
  const Eigen::VectorXd atb = a.transpose() * b;
  const double tol = 1e-10 * std::max(1.0, atb.cwiseAbs().maxCoeff());

  for (int outer = 0; outer < 4 * m + 8; ++outer) {
    const Eigen::VectorXd w = a.transpose() * (b - a * tau);
    int jstar = -1;
    double wmax = tol;
    for (int j = 0; j < m; ++j)
      if (!passive[j] && w[j] > wmax) {
        wmax = w[j];
        jstar = j;
      }
    if (jstar < 0) break;
    passive[jstar] = true;

    for (int inner = 0; inner < 4 * m + 8; ++inner) {
      std::vector<int> pidx;
      for (int j = 0; j < m; ++j)
        if (passive[j]) pidx.push_back(j);
      Eigen::MatrixXd ap(m, pidx.size());
      for (std::size_t c = 0; c < pidx.size(); ++c) ap.col(c) = a.col(pidx[c]);
      const Eigen::VectorXd sol = ap.colPivHouseholderQr().solve(b);
      bool all_positive = true;
      for (int i = 0; i < sol.size(); ++i)
        if (sol[i] <= 0.0) all_positive = false;
      if (all_positive) {
        tau.setZero();
        for (std::size_t c = 0; c < pidx.size(); ++c) tau[pidx[c]] = sol[c];
        break;
      }
      double step = 1.0;
      for (std::size_t c = 0; c < pidx.size(); ++c) {
        if (sol[c] <= 0.0) {
          const double t = tau[pidx[c]] / (tau[pidx[c]] - sol[c]);
          step = std::min(step, t);
        }
      }
      for (std::size_t c = 0; c < pidx.size(); ++c) {
        tau[pidx[c]] += step * (sol[c] - tau[pidx[c]]);
        if (tau[pidx[c]] <= 1e-14) {
          tau[pidx[c]] = 0.0;
          passive[pidx[c]] = false;
        }
      }
    }
  }
  return tau;
}

LrTestResult lr_test_interior(const Dataset& ds, const Model& model,
                              const FitResult& fit_unrestricted,
                              const Eigen::VectorXd& r0) {
  if (!fit_unrestricted.converged)
    throw Error("lr_test_interior: unrestricted fit did not converge");
  FitOptions fo;
  fo.mode = FitMode::EndoRhoUFixed;
  fo.two_stage = fit_unrestricted.two_stage;
  fo.rho_u_fixed = r0;
  const FitResult restricted = fit_mle(ds, model, fo);
  if (!restricted.converged)
    throw Error("lr_test_interior: restricted fit did not converge");

  LrTestResult out;
  out.method = LrMethod::Chi2;
  const double raw = 2.0 * (fit_unrestricted.loglik - restricted.loglik);
  out.statistic = std::max(raw, 0.0);
  if (raw < -1e-6)
    out.notes += "clamped a negative LR of " + std::to_string(raw) + "; ";
  const double df = model.d();
  for (double a : {0.10, 0.05, 0.01})
    out.critical_values[a] = chi2_quantile(1.0 - a, df);
  out.p_value = 1.0 - chi2_cdf(out.statistic, df);
  return out;
}

LrTestResult lr_test_rho_u_zero(const Dataset& ds, const Model& model,
                                const FitResult& fit_unrestricted,
                                int n_draws, std::uint64_t seed) {
  if (!fit_unrestricted.converged)
    throw Error("lr_test_rho_u_zero: unrestricted fit did not converge");
  const int d = model.d();
  if (d == 0) throw ContractViolation("lr_test_rho_u_zero: no endogenous coordinates");

  FitOptions fo;
  fo.mode = FitMode::EndoRhoUZero;
  fo.two_stage = fit_unrestricted.two_stage;
  const FitResult restricted = fit_mle(ds, model, fo);
  if (!restricted.converged)
    throw Error("lr_test_rho_u_zero: restricted fit did not converge");

  LrTestResult out;
  out.method = LrMethod::SimulatedQp;
  const double raw = 2.0 * (fit_unrestricted.loglik - restricted.loglik);
  out.statistic = std::max(raw, 0.0);
  if (raw < -1e-6)
    out.notes += "clamped a negative LR of " + std::to_string(raw) + "; ";

  // Augmented per-observation score at the restricted fit: numeric score in
  // theta_1 stacked with the closed-form vech Hessian in rho_u.
  const int n = ds.n();
  const ParamVector& theta_r = restricted.theta;
  const Eigen::VectorXd flat_r = flatten(theta_r);
  const int total = static_cast<int>(flat_r.size());

  // Indices of the rho_u block inside flatten() order.
  const int nb = static_cast<int>(theta_r.beta.size());
  const int kz = static_cast<int>(theta_r.delta.size());
  const int rho_u_start = nb + kz + 2 + d;
  std::vector<int> theta1_idx;
  for (int j = 0; j < total; ++j)
    if (j < rho_u_start || j >= rho_u_start + d) theta1_idx.push_back(j);
  const int t1 = static_cast<int>(theta1_idx.size());
  const int mh = d * (d + 1) / 2;

  DatasetLoglik ll(ds, model);
  ll.set_enforce_sign_normalization(false);
  Eigen::MatrixXd scores(n, t1 + mh);
  Eigen::VectorXd per_plus(n), per_minus(n);
  Eigen::VectorXd v = flat_r;
  for (int c = 0; c < t1; ++c) {
    const int j = theta1_idx[c];
    const double h = std::max(1e-5, 1e-4 * std::fabs(flat_r[j]));
    v[j] = flat_r[j] + h;
    const double lp = ll.loglik(unflatten(v, theta_r), per_plus);
    v[j] = flat_r[j] - h;
    const double lm = ll.loglik(unflatten(v, theta_r), per_minus);
    v[j] = flat_r[j];
    if (!std::isfinite(lp) || !std::isfinite(lm))
      throw Error("lr_test_rho_u_zero: score evaluation left the feasible region");
    scores.col(c) = (per_plus - per_minus) / (2.0 * h);
  }
  for (int i = 0; i < n; ++i) {
    const CompositeTerms ct = composite_terms(ds.row(i), theta_r, model);
    scores.row(i).tail(mh) = vech(hessian_rho_u_at_zero(ct, theta_r));
  }

  const Eigen::MatrixXd info = scores.transpose() * scores / n;
  bool clipped = false;
  const Eigen::MatrixXd info_pinv = pseudo_inverse(info, 1e-10, &clipped);
  if (clipped)
    out.notes += "information matrix pseudo-inverse used eigenvalue clipping; ";

  // Weight: Schur complement of the theta_1 block.
  const Eigen::MatrixXd i_hh = info.bottomRightCorner(mh, mh);
  const Eigen::MatrixXd i_hs = info.bottomLeftCorner(mh, t1);
  const Eigen::MatrixXd i_ss = info.topLeftCorner(t1, t1);
  const Eigen::MatrixXd i_ss_pinv = pseudo_inverse(i_ss, 1e-10);
  Eigen::MatrixXd w_mat = i_hh - i_hs * i_ss_pinv * i_hs.transpose();
  w_mat = 0.5 * (w_mat + w_mat.transpose()).eval();

  // Draw (Z_theta1, Z_rho) ~ N(0, info_pinv) and keep the rho block.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(info_pinv);
  const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  const Eigen::MatrixXd draw_factor =
      es.eigenvectors() * ev.cwiseSqrt().asDiagonal();

  std::vector<double> lr_draws(n_draws);
  parallel_for(n_draws, [&](int k) {
    Philox rng(seed, RngStream::kCriticalValues, static_cast<std::uint64_t>(k));
    Eigen::VectorXd gauss(t1 + mh);
    for (int i = 0; i < gauss.size(); ++i) gauss[i] = rng.next_normal();
    const Eigen::VectorXd zfull = draw_factor * gauss;
    const Eigen::VectorXd zr = zfull.tail(mh);
    const Eigen::VectorXd tau = qp_project_nonneg(zr, w_mat);
    const Eigen::VectorXd diff = tau - zr;
    lr_draws[k] = zr.dot(w_mat * zr) - diff.dot(w_mat * diff);
  });

  for (double a : {0.10, 0.05, 0.01})
    out.critical_values[a] = empirical_quantile(lr_draws, 1.0 - a);
  int count_ge = 0;
  for (double lr : lr_draws)
    if (lr >= out.statistic) ++count_ge;
  out.p_value = static_cast<double>(count_ge) / n_draws;
  out.notes +=
      "critical values simulated from the projected-Gaussian limit; draw "
      "functional Q(0) - Q(tau_hat) with the Schur-complement weight; ";
  return out;
}

LrTestResult lr_test_sigma_u_zero(const Dataset& ds, const Model& model,
                                  const FitOptions& opts) {
  FitOptions fo = opts;
  fo.two_stage = true;  // the Gaussian restricted model conditions on OLS stage 1
  const FitResult unrestricted = fit_mle(ds, model, fo);
  if (!unrestricted.converged)
    throw Error("lr_test_sigma_u_zero: unrestricted fit did not converge");

  Model m = model;
  if (fo.mode == FitMode::Exogenous) m.endo.clear();
  const double loglik_restricted =
      restricted_gaussian_loglik(ds, m, unrestricted.theta);

  LrTestResult out;
  out.method = LrMethod::MixtureChi2PointMass;
  const double raw = 2.0 * (unrestricted.loglik - loglik_restricted);
  out.statistic = std::max(raw, 0.0);
  if (raw < -1e-6)
    out.notes += "clamped a negative LR of " + std::to_string(raw) + "; ";
  // Equal mixture of a point mass at 0 and chi2_1: c(a) solves
  // 0.5 P(chi2_1 > c) = a, so c(0.05) = 2.706 and c(0.01) = 5.412.
  for (double a : {0.10, 0.05, 0.01})
    out.critical_values[a] = chi2_quantile(1.0 - 2.0 * a, 1.0);
  out.p_value = out.statistic <= 0.0
                    ? 1.0
                    : 0.5 * (1.0 - chi2_cdf(out.statistic, 1.0));
  return out;
}

}  // namespace sfa
