#include "sfa/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sfa {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

OptimResult nelder_mead(const Objective& f, const Eigen::VectorXd& x0,
                        const NelderMeadOptions& opts) {
  const int n = static_cast<int>(x0.size());
  OptimResult res;
  int evals = 0;
  auto call = [&](const Eigen::VectorXd& x) {
    ++evals;
    const double v = f(x);
    return std::isnan(v) ? kInf : v;
  };

  std::vector<Eigen::VectorXd> pts(n + 1, x0);
  std::vector<double> fv(n + 1);
  fv[0] = call(x0);
  for (int i = 0; i < n; ++i) {
    pts[i + 1][i] += opts.initial_step * std::max(1.0, std::fabs(x0[i]));
    fv[i + 1] = call(pts[i + 1]);
  }

  std::vector<int> order(n + 1);
  auto sort_simplex = [&] {
    for (int i = 0; i <= n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return fv[a] < fv[b]; });
  };
  sort_simplex();
  res.accepted.push_back(fv[order[0]]);

  while (evals < opts.max_evaluations) {
    const int best = order[0], worst = order[n], second_worst = order[n - 1];
    if (std::isfinite(fv[best]) && std::isfinite(fv[second_worst])) {
      double max_dx = 0.0;
      for (int i = 1; i <= n; ++i)
        max_dx = std::max(max_dx, (pts[order[i]] - pts[best]).lpNorm<Eigen::Infinity>());
      if (std::fabs(fv[worst] - fv[best]) < opts.f_tolerance &&
          max_dx < opts.x_tolerance)
        break;
    }
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) centroid += pts[order[i]];
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd xr = centroid + (centroid - pts[worst]);
    const double fr = call(xr);
    if (fr < fv[best]) {
      const Eigen::VectorXd xe = centroid + 2.0 * (centroid - pts[worst]);
      const double fe = call(xe);
      if (fe < fr) {
        pts[worst] = xe;
        fv[worst] = fe;
      } else {
        pts[worst] = xr;
        fv[worst] = fr;
      }
    } else if (fr < fv[second_worst]) {
      pts[worst] = xr;
      fv[worst] = fr;
    } else {
      const bool outside = fr < fv[worst];
      Eigen::VectorXd xc;
      if (outside)
        xc = centroid + 0.5 * (xr - centroid);
      else
        xc = centroid - 0.5 * (centroid - pts[worst]);
      const double fc = call(xc);
      if (fc < std::min(fr, fv[worst])) {
        pts[worst] = xc;
        fv[worst] = fc;
      } else {
        // shrink toward the best vertex
        for (int i = 1; i <= n; ++i) {
          const int idx = order[i];
          pts[idx] = pts[best] + 0.5 * (pts[idx] - pts[best]);
          fv[idx] = call(pts[idx]);
        }
      }
    }
    sort_simplex();
    if (res.accepted.empty() || fv[order[0]] < res.accepted.back())
      res.accepted.push_back(fv[order[0]]);
    ++res.iterations;
  }

  sort_simplex();
  res.x = pts[order[0]];
  res.f = fv[order[0]];
  res.evaluations = evals;
  res.converged = std::isfinite(res.f);
  return res;
}

Eigen::VectorXd fd_gradient(const Objective& f, const Eigen::VectorXd& x,
                            double h) {
  const int n = static_cast<int>(x.size());
  Eigen::VectorXd g(n);
  Eigen::VectorXd xp = x;
  for (int j = 0; j < n; ++j) {
    const double hj = h * std::max(1.0, std::fabs(x[j]));
    xp[j] = x[j] + hj;
    const double fp = f(xp);
    xp[j] = x[j] - hj;
    const double fm = f(xp);
    xp[j] = x[j];
    g[j] = (fp - fm) / (2.0 * hj);
  }
  return g;
}

Eigen::MatrixXd fd_hessian(const Objective& f, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& steps) {
  const int n = static_cast<int>(x.size());
  Eigen::MatrixXd h(n, n);
  const double f0 = f(x);
  Eigen::VectorXd xp = x;
  for (int j = 0; j < n; ++j) {
    const double hj = steps[j];
    xp[j] = x[j] + hj;
    const double fp = f(xp);
    xp[j] = x[j] - hj;
    const double fm = f(xp);
    xp[j] = x[j];
    h(j, j) = (fp - 2.0 * f0 + fm) / (hj * hj);
  }
  for (int j = 0; j < n; ++j) {
    for (int k = j + 1; k < n; ++k) {
      const double hj = steps[j], hk = steps[k];
      xp[j] = x[j] + hj;
      xp[k] = x[k] + hk;
      const double fpp = f(xp);
      xp[k] = x[k] - hk;
      const double fpm = f(xp);
      xp[j] = x[j] - hj;
      xp[k] = x[k] + hk;
      const double fmp = f(xp);
      xp[k] = x[k] - hk;
      const double fmm = f(xp);
      xp[j] = x[j];
      xp[k] = x[k];
      const double v = (fpp - fpm - fmp + fmm) / (4.0 * hj * hk);
      h(j, k) = v;
      h(k, j) = v;
    }
  }
  return h;
}

OptimResult bfgs(const Objective& f, const Eigen::VectorXd& x0,
                 const BfgsOptions& opts) {
  const int n = static_cast<int>(x0.size());
  OptimResult res;
  int evals = 0;
  auto call = [&](const Eigen::VectorXd& x) {
    ++evals;
    const double v = f(x);
    return std::isnan(v) ? kInf : v;
  };

  Eigen::VectorXd x = x0;
  double fx = call(x);
  res.accepted.push_back(fx);
  if (!std::isfinite(fx)) {
    res.x = x;
    res.f = fx;
    res.evaluations = evals;
    return res;
  }

  auto grad = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd g(n);
    Eigen::VectorXd xp = p;
    for (int j = 0; j < n; ++j) {
      const double hj = opts.fd_step * std::max(1.0, std::fabs(p[j]));
      xp[j] = p[j] + hj;
      double fp = call(xp);
      xp[j] = p[j] - hj;
      double fm = call(xp);
      if (!std::isfinite(fp) || !std::isfinite(fm)) {
        // One-sided fallback near the feasibility boundary.
        const double fc = fx;
        if (std::isfinite(fp)) {
          g[j] = (fp - fc) / hj;
        } else if (std::isfinite(fm)) {
          g[j] = (fc - fm) / hj;
        } else {
          g[j] = 0.0;
        }
      } else {
        g[j] = (fp - fm) / (2.0 * hj);
      }
      xp[j] = p[j];
    }
    return g;
  };

  Eigen::VectorXd g = grad(x);
  Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(n, n);

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    res.grad_norm = g.norm();
    if (res.grad_norm < opts.grad_tolerance) {
      res.converged = true;
      break;
    }
    Eigen::VectorXd dir = -(hinv * g);
    double slope = dir.dot(g);
    if (!(slope < 0.0)) {  // reset to steepest descent
      hinv.setIdentity();
      dir = -g;
      slope = dir.dot(g);
    }

    // Backtracking Armijo line search; infeasible (+inf) points just shrink.
    double step = 1.0;
    double fnew = kInf;
    Eigen::VectorXd xnew;
    bool accepted = false;
    for (int ls = 0; ls < opts.max_line_search; ++ls) {
      xnew = x + step * dir;
      fnew = call(xnew);
      if (std::isfinite(fnew) && fnew <= fx + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    ++res.iterations;
    if (!accepted) break;

    const Eigen::VectorXd gnew = grad(xnew);
    const Eigen::VectorXd s = xnew - x;
    const Eigen::VectorXd yv = gnew - g;
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd i_mat = Eigen::MatrixXd::Identity(n, n);
      hinv = (i_mat - rho * s * yv.transpose()) * hinv *
                 (i_mat - rho * yv * s.transpose()) +
             rho * s * s.transpose();
    }
    x = xnew;
    fx = fnew;
    g = gnew;
    res.accepted.push_back(fx);
  }

  res.grad_norm = g.norm();
  if (res.grad_norm < opts.grad_tolerance) res.converged = true;
  res.x = x;
  res.f = fx;
  res.evaluations = evals;
  return res;
}

}  // namespace sfa
