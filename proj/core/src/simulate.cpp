#include "sfa/simulate.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>

#include "sfa/efficiency.hpp"
#include "sfa/parallel.hpp"
#include "sfa/rng.hpp"
#include "sfa/stats.hpp"

namespace sfa {

namespace {

constexpr double kTrueGamma = 0.316;
constexpr double kTrueBeta = 0.661;
constexpr double kTrueSigma2U = 2.752;

// R's default (type 7) quantile, matching the usual summary-table convention.
double quantile_type7(std::vector<double>& sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double h = p * (static_cast<double>(n) - 1.0);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, n - 1);
  const double w = h - static_cast<double>(lo);
  return (1.0 - w) * sorted[lo] + w * sorted[hi];
}

}  // namespace

Model mc_model() {
  Model m;
  m.px = 2;
  m.kz = 2;
  m.q = 5;
  m.endo = {{0, 1}, {1, 1}};  // X2, then Z2
  return m;
}

ParamVector mc_truth(const McConfig& cfg) {
  if (cfg.setting == McSetting::Custom) {
    if (!cfg.custom_theta)
      throw Error("mc_truth: custom setting requires custom_theta");
    ParamVector p = *cfg.custom_theta;
    check_dims(p, mc_model());
    require_feasible(p);
    return p;
  }
  ParamVector p;
  p.beta = Eigen::Vector3d(0.0, kTrueBeta, kTrueBeta);
  p.delta = Eigen::Vector2d(0.0, 0.0);
  p.sigma2_v = 1.0;
  p.sigma2_u = kTrueSigma2U;
  p.rho_v = Eigen::Vector2d(0.5, 0.5);
  p.rho_u = cfg.setting == McSetting::S2 ? Eigen::Vector2d(0.5, 0.5)
                                         : Eigen::Vector2d(0.0, 0.0);
  p.gamma = Eigen::MatrixXd(5, 2);
  p.gamma << 0.0, 0.0, kTrueGamma, kTrueGamma, kTrueGamma, kTrueGamma,
      kTrueGamma, kTrueGamma, kTrueGamma, kTrueGamma;
  p.d_eta = Eigen::Vector2d(1.0, 1.0);
  p.c_eta_lower = Eigen::VectorXd::Constant(1, 0.5);
  return p;
}

std::pair<Dataset, Eigen::VectorXd> simulate_dataset(const McConfig& cfg,
                                                     int replication_index) {
  if (cfg.n < 50) throw Error("simulate_dataset: n must be at least 50");
  const Model m = mc_model();
  const ParamVector truth = mc_truth(cfg);
  const int n = cfg.n;
  const int d = 2;

  // (V, eta) ~ N(0, [[sigma2_v, sigma_v rho_v' D], [D rho_v sigma_v, DCD]]).
  Eigen::MatrixXd cov_veta(1 + d, 1 + d);
  const double sigma_v = std::sqrt(truth.sigma2_v);
  const Eigen::MatrixXd sigma_eta = truth.sigma_eta();
  cov_veta(0, 0) = truth.sigma2_v;
  cov_veta.block(0, 1, 1, d) =
      (sigma_v * (truth.d_eta.asDiagonal() * truth.rho_v)).transpose();
  cov_veta.block(1, 0, d, 1) = cov_veta.block(0, 1, 1, d).transpose();
  cov_veta.block(1, 1, d, d) = sigma_eta;
  Eigen::LLT<Eigen::MatrixXd> cov_llt(cov_veta);
  if (cov_llt.info() != Eigen::Success)
    throw InfeasibleParameter("simulate_dataset: (V, eta) covariance not PD");
  const Eigen::MatrixXd l_veta = cov_llt.matrixL();

  // Conditional law of U0* given eta.
  Eigen::LLT<Eigen::MatrixXd> c_llt(truth.c_eta());
  const Eigen::VectorXd cr = c_llt.solve(truth.rho_u);
  const double qu = truth.rho_u.dot(cr);
  const double sigma_u = std::sqrt(truth.sigma2_u);
  const double u_cond_sd = sigma_u * std::sqrt(1.0 - qu);
  const Eigen::VectorXd u_cond_coef =
      sigma_u * (truth.d_eta.cwiseInverse().asDiagonal() * cr);

  const double root_half = std::sqrt(0.5);

  Dataset ds;
  ds.y.resize(n);
  ds.x.resize(n, 2);
  ds.z.resize(n, 2);
  ds.w.resize(n, 5);
  ds.endo = m.endo;
  ds.y_name = "Y";
  ds.x_names = {"X1", "X2"};
  ds.z_names = {"Z1", "Z2"};
  ds.w_names = {"const", "X1", "Z1", "W1", "W2"};
  Eigen::VectorXd true_u(n);

  Philox rng(cfg.seed, RngStream::kSimulate,
             static_cast<std::uint64_t>(replication_index));
  Eigen::VectorXd gauss(3);
  for (int i = 0; i < n; ++i) {
    // Equicorrelated exogenous block (X1, Z1, W1, W2), correlation 0.5.
    const double common = rng.next_normal();
    const double x1 = root_half * (common + rng.next_normal());
    const double z1 = root_half * (common + rng.next_normal());
    const double w1 = root_half * (common + rng.next_normal());
    const double w2 = root_half * (common + rng.next_normal());

    for (int j = 0; j < 3; ++j) gauss[j] = rng.next_normal();
    const Eigen::VectorXd veta = l_veta * gauss;
    const double v = veta[0];
    const Eigen::VectorXd eta = veta.tail(d);

    Eigen::VectorXd w_row(5);
    w_row << 1.0, x1, z1, w1, w2;
    const double x2 = w_row.dot(truth.gamma.col(0)) + eta[0];
    const double z2 = w_row.dot(truth.gamma.col(1)) + eta[1];

    const double u_star =
        u_cond_coef.dot(eta) + u_cond_sd * rng.next_normal();
    const double u0 = std::fabs(u_star);

    ds.x(i, 0) = x1;
    ds.x(i, 1) = x2;
    ds.z(i, 0) = z1;
    ds.z(i, 1) = z2;
    ds.w.row(i) = w_row.transpose();
    const double g = m.scaling_value(ds.z.row(i).transpose(), truth.delta);
    const double u = u0 * g;
    true_u[i] = u;
    ds.y[i] = m.frontier_value(ds.x.row(i).transpose(), truth.beta) + v - u;
  }
  return {std::move(ds), std::move(true_u)};
}

McReport run_monte_carlo(const McConfig& cfg) {
  if (cfg.replications < 1) throw Error("run_monte_carlo: replications must be >= 1");
  const Model model = mc_model();
  const ParamVector truth = mc_truth(cfg);
  const Eigen::VectorXd flat_truth = flatten(truth);
  const int dim = static_cast<int>(flat_truth.size());
  const int reps = cfg.replications;
  const double z_level = norm_quantile(0.5 + cfg.ci_level / 2.0);

  struct RepOutcome {
    bool ok = false;
    Eigen::VectorXd theta;
    Eigen::VectorXd se;          // empty if unavailable
    std::vector<char> sub_cover;  // empty if unavailable
    bool lr_ok = false;
    double lr_zero_stat = 0.0;
    std::map<double, double> lr_zero_crit;
    double lr_interior_stat = 0.0;
    std::vector<double> scores;
  };
  std::vector<RepOutcome> outcomes(reps);

  parallel_for(reps, [&](int r) {
    RepOutcome& o = outcomes[r];
    try {
      auto [ds, true_u] = simulate_dataset(cfg, r);
      FitOptions fo;
      fo.mode = FitMode::EndoFull;
      fo.two_stage = true;
      const FitResult fit = fit_mle(ds, model, fo);
      if (!fit.converged) return;
      o.theta = flatten(fit.theta);
      o.ok = true;

      if (cfg.compute.wald_ci) {
        try {
          o.se = wald_se(ds, model, fit);
        } catch (const DegenerateCurvature&) {
          // boundary solutions: excluded from the SE/coverage columns
        }
      }
      if (cfg.compute.subsample_ci) {
        try {
          SubsampleOptions so = cfg.subsample;
          so.rng_seed = cfg.seed;
          so.rng_stream_index = static_cast<std::uint64_t>(r);
          so.level = cfg.ci_level;
          const SubsampleCi ci = subsample_ci(ds, model, fit, so);
          o.sub_cover.resize(dim);
          for (int j = 0; j < dim; ++j)
            o.sub_cover[j] = ci.intervals[j][0] <= flat_truth[j] &&
                             flat_truth[j] <= ci.intervals[j][1];
        } catch (const Error&) {
        }
      }
      if (cfg.compute.lr_tests) {
        try {
          const std::uint64_t lr_seed =
              cfg.seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(r) + 1);
          const LrTestResult zero =
              lr_test_rho_u_zero(ds, model, fit, cfg.lr_draws, lr_seed);
          const LrTestResult interior =
              lr_test_interior(ds, model, fit, Eigen::Vector2d(0.5, 0.5));
          o.lr_zero_stat = zero.statistic;
          o.lr_zero_crit = zero.critical_values;
          o.lr_interior_stat = interior.statistic;
          o.lr_ok = true;
        } catch (const Error&) {
        }
      }
      if (cfg.compute.efficiency) {
        const EfficiencyResult te = efficiency_scores(ds, model, fit.theta);
        o.scores.assign(te.scores.data(), te.scores.data() + te.scores.size());
      }
    } catch (const Error&) {
      o.ok = false;
    }
  });

  McReport rep;
  rep.setting = cfg.setting == McSetting::S1   ? "s1"
                : cfg.setting == McSetting::S2 ? "s2"
                                               : "custom";
  rep.n = cfg.n;
  rep.replications = reps;
  rep.seed = cfg.seed;

  std::vector<const RepOutcome*> ok;
  for (const auto& o : outcomes)
    if (o.ok) ok.push_back(&o);
  rep.failed = reps - static_cast<int>(ok.size());
  if (ok.empty()) {
    rep.diagnostics = "all replications failed";
    return rep;
  }
  if (rep.failed > reps / 10)
    rep.diagnostics += "more than 10% of replications failed; ";

  const std::vector<std::string> names =
      param_names(truth, {"etaX", "etaZ"}, {"X1", "X2"}, {"Z1", "Z2"},
                  {"const", "X1", "Z1", "W1", "W2"});
  rep.rows.resize(dim);
  int n_se = 0, n_sub = 0;
  for (const auto* o : ok) {
    if (o->se.size() == dim) ++n_se;
    if (!o->sub_cover.empty()) ++n_sub;
  }
  rep.wald_failures = static_cast<int>(ok.size()) - n_se;
  rep.subsample_failures =
      cfg.compute.subsample_ci ? static_cast<int>(ok.size()) - n_sub : 0;

  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (int j = 0; j < dim; ++j) {
    McParamRow& row = rep.rows[j];
    row.name = names[j];
    row.truth = flat_truth[j];
    double sum = 0.0;
    for (const auto* o : ok) sum += o->theta[j];
    row.mean = sum / static_cast<double>(ok.size());
    double ss = 0.0;
    for (const auto* o : ok) ss += (o->theta[j] - row.mean) * (o->theta[j] - row.mean);
    row.sd = ok.size() > 1 ? std::sqrt(ss / (static_cast<double>(ok.size()) - 1.0))
                           : 0.0;
    row.avg_se = nan;
    row.wald_coverage = nan;
    row.subsample_coverage = nan;
    if (cfg.compute.wald_ci && n_se > 0) {
      double se_sum = 0.0;
      int cover = 0;
      for (const auto* o : ok) {
        if (o->se.size() != dim) continue;
        se_sum += o->se[j];
        if (std::fabs(o->theta[j] - flat_truth[j]) <= z_level * o->se[j]) ++cover;
      }
      row.avg_se = se_sum / n_se;
      row.wald_coverage = static_cast<double>(cover) / n_se;
    }
    if (cfg.compute.subsample_ci && n_sub > 0) {
      int cover = 0;
      for (const auto* o : ok)
        if (!o->sub_cover.empty() && o->sub_cover[j]) ++cover;
      row.subsample_coverage = static_cast<double>(cover) / n_sub;
    }
  }

  if (cfg.compute.lr_tests) {
    int n_lr = 0;
    for (const auto* o : ok)
      if (o->lr_ok) ++n_lr;
    if (n_lr > 0) {
      const double df = model.d();
      for (double level : {0.10, 0.05, 0.01}) {
        int rej_zero = 0, rej_int = 0;
        const double crit_int = chi2_quantile(1.0 - level, df);
        for (const auto* o : ok) {
          if (!o->lr_ok) continue;
          if (o->lr_zero_stat > o->lr_zero_crit.at(level)) ++rej_zero;
          if (o->lr_interior_stat > crit_int) ++rej_int;
        }
        rep.tests.push_back(
            {"rho_u_zero", level, static_cast<double>(rej_zero) / n_lr, n_lr});
        rep.tests.push_back(
            {"rho_u_interior", level, static_cast<double>(rej_int) / n_lr, n_lr});
      }
    }
  }

  if (cfg.compute.efficiency) {
    std::vector<double> pooled;
    for (const auto* o : ok)
      pooled.insert(pooled.end(), o->scores.begin(), o->scores.end());
    if (!pooled.empty()) {
      std::sort(pooled.begin(), pooled.end());
      rep.te.present = true;
      rep.te.min = pooled.front();
      rep.te.max = pooled.back();
      rep.te.q1 = quantile_type7(pooled, 0.25);
      rep.te.median = quantile_type7(pooled, 0.50);
      rep.te.q3 = quantile_type7(pooled, 0.75);
      double s = 0.0;
      for (double v : pooled) s += v;
      rep.te.mean = s / static_cast<double>(pooled.size());
    }
  }
  return rep;
}

}  // namespace sfa
