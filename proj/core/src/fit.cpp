#include "sfa/fit.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <cmath>

#include "sfa/loglik.hpp"
#include "sfa/optim.hpp"
#include "sfa/stats.hpp"

namespace sfa {

namespace {

constexpr double kSigma2uFloor = 1e-3;

// Third central moment of a half-normal with scale s is
// s^3 sqrt(2/pi) (4/pi - 1); the composite residual inherits it with a minus.
double sigma2u_from_skewness(double m3) {
  const double c = std::sqrt(2.0 / M_PI) * (4.0 / M_PI - 1.0);
  const double cube = -m3 / c;
  if (!(cube > 0.0)) return kSigma2uFloor;
  const double s2 = std::pow(cube, 2.0 / 3.0);
  return std::max(s2, kSigma2uFloor);
}

Eigen::MatrixXd design_with_intercept(const Eigen::MatrixXd& x,
                                      const Eigen::MatrixXd& extra) {
  const int n = static_cast<int>(x.rows());
  Eigen::MatrixXd d(n, 1 + x.cols() + extra.cols());
  d.col(0).setOnes();
  d.middleCols(1, x.cols()) = x;
  if (extra.cols() > 0) d.rightCols(extra.cols()) = extra;
  return d;
}

}  // namespace

double conditional_mean_u0(const Eigen::VectorXd& eta, const ParamVector& p) {
  require_feasible(p, false);
  if (eta.size() != p.d())
    throw DimensionError("conditional_mean_u0: eta dimension mismatch");
  const double sigma_u = std::sqrt(p.sigma2_u);
  if (p.d() == 0) return sigma_u * std::sqrt(2.0 / M_PI);
  Eigen::LLT<Eigen::MatrixXd> llt(p.c_eta());
  const double r = p.rho_u.dot(llt.solve(p.d_eta.cwiseInverse().asDiagonal() * eta));
  const double qu = p.rho_u.dot(llt.solve(p.rho_u));
  const double s = std::sqrt(1.0 - qu);
  return 2.0 * sigma_u * s * norm_pdf(r / s) +
         (2.0 * norm_cdf(r / s) - 1.0) * sigma_u * r;
}

ParamVector starting_values(const Dataset& ds, const FirstStage& stage1,
                            const Model& model) {
  const int d = model.d();
  const int n = ds.n();

  ParamVector p;
  p.delta = Eigen::VectorXd::Zero(model.kz);
  p.rho_v = Eigen::VectorXd::Zero(d);
  p.rho_u = Eigen::VectorXd::Zero(d);
  p.gamma = stage1.gamma;
  p.d_eta = stage1.d_eta.cwiseMax(1e-6);
  p.c_eta_lower = stage1.c_eta_lower;
  if (d > 0) {
    // Shrink toward the identity until positive definite (degenerate first
    // stages can produce correlation estimates on the boundary).
    Eigen::MatrixXd c = unpack_lower_triangle(p.c_eta_lower, d);
    for (int tries = 0; tries < 64; ++tries) {
      Eigen::LLT<Eigen::MatrixXd> llt(c);
      if (llt.info() == Eigen::Success && (c.array().abs() <= 1.0).all()) break;
      c = 0.9 * c + 0.1 * Eigen::MatrixXd::Identity(d, d);
    }
    p.c_eta_lower = pack_lower_triangle(c);
    p.rho_u[0] = 0.05;
  }

  // OLS of y on (intercept, X, eta).
  const Eigen::MatrixXd design = design_with_intercept(ds.x, stage1.residuals);
  const Eigen::VectorXd coef =
      design.colPivHouseholderQr().solve(ds.y);
  p.beta = coef.head(1 + model.px);
  const Eigen::VectorXd resid = ds.y - design * coef;
  const double m2 = resid.squaredNorm() / n;
  const double m3 = resid.array().cube().sum() / n;

  p.sigma2_u = sigma2u_from_skewness(m3);
  double stv2 = m2 - p.sigma2_u * (1.0 - 2.0 / M_PI);
  if (!(stv2 > 1e-3)) stv2 = std::max(0.25 * m2, 1e-3);

  if (d > 0) {
    const Eigen::VectorXd kappa = coef.tail(d);
    const Eigen::MatrixXd sigma_eta = p.sigma_eta();
    const double t = kappa.dot(sigma_eta * kappa);
    p.sigma2_v = stv2 + t;
    const double sigma_v = std::sqrt(p.sigma2_v);
    p.rho_v = p.c_eta() * (p.d_eta.asDiagonal() * kappa) / sigma_v;
    // rho_v' C^-1 rho_v = t / (stv2 + t) < 1 by construction; rescale anyway
    // if rounding lands too close to the boundary.
    Eigen::LLT<Eigen::MatrixXd> llt(p.c_eta());
    const double qv = p.rho_v.dot(llt.solve(p.rho_v));
    if (qv > 0.99) p.rho_v *= std::sqrt(0.99 / qv);
  } else {
    p.sigma2_v = stv2;
  }

  require_feasible(p);
  return p;
}

ParamVector starting_values_exogenous(const Dataset& ds, const Model& model) {
  FirstStage empty;
  empty.residuals = Eigen::MatrixXd(ds.n(), 0);
  Model exo = model;
  exo.endo.clear();
  return starting_values(ds, empty, exo);
}

FitResult fit_mle(const Dataset& ds, const Model& model, const FitOptions& opts) {
  validate_dataset(ds);
  const int n = ds.n();

  Model m = model;
  if (opts.mode == FitMode::Exogenous) m.endo.clear();

  // Starting point and fixed blocks.
  FirstStage stage1;
  ParamVector base;
  if (opts.mode == FitMode::Exogenous) {
    base = opts.start ? *opts.start : starting_values_exogenous(ds, m);
  } else {
    if (opts.start) {
      base = *opts.start;
    } else {
      stage1 = first_stage_ols(ds);
      base = starting_values(ds, stage1, m);
    }
  }
  if (opts.mode == FitMode::EndoRhoUZero) base.rho_u.setZero();
  if (opts.mode == FitMode::EndoRhoUFixed) {
    if (opts.rho_u_fixed.size() != m.d())
      throw DimensionError("fit_mle: rho_u_fixed dimension mismatch");
    base.rho_u = opts.rho_u_fixed;
    const Feasibility feas = check_feasible(base);
    if (!feas) throw InfeasibleParameter("fit_mle: rho_u_fixed infeasible: " + feas.reason);
  }
  check_dims(base, m);

  const int total_params = static_cast<int>(flatten(base).size());
  if (n <= total_params)
    throw Error("fit_mle: need more observations than parameters");

  DatasetLoglik ll(ds, m);
  if (opts.two_stage && opts.mode != FitMode::Exogenous) ll.fix_first_stage(base);

  ParamSpace space(m, opts.mode, opts.two_stage, base);
  const double inv_n = 1.0 / static_cast<double>(n);
  auto objective = [&](const Eigen::VectorXd& t) {
    const double v = ll.loglik(space.unpack(t));
    return -v * inv_n;
  };

  // Multistart: method-of-moments start plus rho_u variants along the
  // normalized direction (likelihood is bimodal in rho_u with a ridge at 0).
  std::vector<ParamVector> starts;
  if (opts.start) {
    starts.push_back(base);
  } else {
    starts.push_back(base);
    if (opts.mode == FitMode::EndoFull && m.d() > 0) {
      ParamVector s2 = base;
      s2.rho_u.setZero();
      s2.rho_u[0] = 1e-3;
      ParamVector s3 = base;
      s3.rho_u.setZero();
      s3.rho_u[0] = 0.5;
      if (opts.multistart_count >= 2) starts.push_back(s2);
      if (opts.multistart_count >= 3) starts.push_back(s3);
    }
  }

  NelderMeadOptions nm_opts;
  nm_opts.max_evaluations =
      opts.nm_max_evaluations > 0 ? opts.nm_max_evaluations : 150 * space.dim();
  BfgsOptions bfgs_opts;
  bfgs_opts.max_iterations = opts.max_iterations;
  bfgs_opts.grad_tolerance = opts.gradient_tolerance;

  bool have_best = false;
  OptimResult best;
  double best_rho_norm = 0.0;
  std::vector<double> best_accepted;
  for (const ParamVector& s : starts) {
    const Eigen::VectorXd t0 = space.pack(s);
    std::vector<double> accepted;
    Eigen::VectorXd t_start = t0;
    if (opts.simplex_polish) {
      const OptimResult nm = nelder_mead(objective, t0, nm_opts);
      t_start = nm.x;
      accepted = nm.accepted;
    }
    OptimResult r = bfgs(objective, t_start, bfgs_opts);
    accepted.insert(accepted.end(), r.accepted.begin(), r.accepted.end());
    const double rho_norm = space.unpack(r.x).rho_u.norm();
    const double tie = 1e-8 * inv_n;  // ties measured on the summed likelihood
    if (!have_best || r.f < best.f - tie ||
        (std::fabs(r.f - best.f) <= tie && rho_norm < best_rho_norm)) {
      have_best = true;
      best = r;
      best_rho_norm = rho_norm;
      best_accepted = std::move(accepted);
    }
  }

  FitResult out;
  out.mode = opts.mode;
  out.two_stage = opts.two_stage;
  out.n = n;
  out.theta = space.unpack(best.x);
  // Sign normalization: flip the whole rho_u vector if an optimizer ever
  // returns rho_u[0] < 0 (cannot happen through the logistic transform, but
  // callers may inject custom starts/solutions).
  if (m.d() > 0 && out.theta.rho_u.size() > 0 && out.theta.rho_u[0] < 0.0)
    out.theta.rho_u = -out.theta.rho_u;
  out.loglik = ll.loglik(out.theta);
  out.converged = best.converged && std::isfinite(out.loglik);
  out.iterations = best.iterations;
  out.gradient_norm = best.grad_norm;
  out.accepted_loglik.reserve(best_accepted.size());
  for (double f : best_accepted)
    if (std::isfinite(f)) out.accepted_loglik.push_back(-f * static_cast<double>(n));

  if (m.d() > 0 && opts.mode == FitMode::EndoFull) {
    if (out.theta.rho_u[0] < 1e-6)
      out.notes += "boundary: rho_u[0] within 1e-6 of 0 (second-order "
                   "identification regime; Hessian-based SEs unreliable); ";
    else if (out.theta.rho_u[0] > 1.0 - 1e-6)
      out.notes += "boundary: rho_u[0] within 1e-6 of 1; ";
  }
  if (!out.converged) out.notes += "did not reach gradient tolerance; ";
  return out;
}

FitResult fit_mle(const Dataset& ds, const FitOptions& opts) {
  return fit_mle(ds, model_from(ds, opts.mode == FitMode::Exogenous), opts);
}

}  // namespace sfa
