#include "sfa/params.hpp"

#include <Eigen/Cholesky>
#include <cmath>

namespace sfa {

Eigen::VectorXd pack_lower_triangle(const Eigen::MatrixXd& c) {
  const int d = static_cast<int>(c.rows());
  Eigen::VectorXd out(d * (d - 1) / 2);
  int k = 0;
  for (int j = 0; j < d; ++j)
    for (int i = j + 1; i < d; ++i) out[k++] = c(i, j);
  return out;
}

Eigen::MatrixXd unpack_lower_triangle(const Eigen::VectorXd& packed, int d) {
  if (packed.size() != d * (d - 1) / 2)
    throw DimensionError("unpack_lower_triangle: packed size does not match dimension");
  Eigen::MatrixXd c = Eigen::MatrixXd::Identity(d, d);
  int k = 0;
  for (int j = 0; j < d; ++j)
    for (int i = j + 1; i < d; ++i) {
      c(i, j) = packed[k];
      c(j, i) = packed[k];
      ++k;
    }
  return c;
}

Eigen::MatrixXd ParamVector::c_eta() const {
  return unpack_lower_triangle(c_eta_lower, d());
}

Eigen::MatrixXd ParamVector::sigma_eta() const {
  const Eigen::MatrixXd c = c_eta();
  return d_eta.asDiagonal() * c * d_eta.asDiagonal();
}

Feasibility check_feasible(const ParamVector& p, bool require_sign_normalization) {
  auto fail = [](std::string why) { return Feasibility{false, std::move(why)}; };
  if (!(p.sigma2_v > 0.0) || !std::isfinite(p.sigma2_v))
    return fail("sigma2_v must be positive");
  if (!(p.sigma2_u > 0.0) || !std::isfinite(p.sigma2_u))
    return fail("sigma2_u must be positive");
  if (!p.beta.allFinite() || !p.delta.allFinite()) return fail("non-finite beta/delta");
  const int d = p.d();
  if (p.rho_v.size() != d || p.d_eta.size() != d ||
      p.c_eta_lower.size() != static_cast<int>(d) * (d - 1) / 2)
    return fail("inconsistent control-function dimensions");
  if (d == 0) return {};
  if (!p.rho_v.allFinite() || !p.rho_u.allFinite() || !p.d_eta.allFinite() ||
      !p.c_eta_lower.allFinite() || !p.gamma.allFinite())
    return fail("non-finite control-function parameters");
  if (!(p.d_eta.minCoeff() > 0.0)) return fail("d_eta entries must be positive");
  const Eigen::MatrixXd c = p.c_eta();
  Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() != Eigen::Success) return fail("C_eta is not positive definite");
  const double qv = p.rho_v.dot(llt.solve(p.rho_v));
  if (!(qv < 1.0 - kFeasibilityMargin))
    return fail("rho_v' C^-1 rho_v must be below 1");
  const double qu = p.rho_u.dot(llt.solve(p.rho_u));
  if (!(qu < 1.0 - kFeasibilityMargin))
    return fail("rho_u' C^-1 rho_u must be below 1");
  if (require_sign_normalization && d > 0 && p.rho_u[0] < 0.0)
    return fail("rho_u[0] must lie in [0,1] (sign normalization)");
  return {};
}

void require_feasible(const ParamVector& p, bool require_sign_normalization) {
  const Feasibility f = check_feasible(p, require_sign_normalization);
  if (!f) throw InfeasibleParameter("infeasible parameter: " + f.reason);
}

double Model::frontier_value(const Eigen::VectorXd& x, const Eigen::VectorXd& beta) const {
  if (frontier) return frontier(x, beta);
  if (beta.size() != x.size() + 1)
    throw DimensionError("frontier: beta must have length 1 + #regressors");
  return beta[0] + x.dot(beta.tail(x.size()));
}

double Model::scaling_value(const Eigen::VectorXd& z, const Eigen::VectorXd& delta) const {
  if (scaling) return scaling(z, delta);
  if (z.size() != delta.size())
    throw DimensionError("scaling: z and delta lengths differ");
  return std::exp(z.dot(delta));
}

Eigen::VectorXd Model::endo_values(const Observation& obs) const {
  Eigen::VectorXd r(endo.size());
  for (std::size_t i = 0; i < endo.size(); ++i) {
    const auto& e = endo[i];
    r[static_cast<int>(i)] = e.source == 0 ? obs.x[e.col] : obs.z[e.col];
  }
  return r;
}

Eigen::VectorXd Model::eta(const Observation& obs, const ParamVector& p) const {
  if (endo.empty()) return Eigen::VectorXd();
  return endo_values(obs) - p.gamma.transpose() * obs.w;
}

void check_dims(const ParamVector& p, const Model& m) {
  const int d = m.d();
  if (!m.frontier && p.beta.size() != m.px + 1)
    throw DimensionError("beta length does not match frontier layout");
  if (!m.scaling && p.delta.size() != m.kz)
    throw DimensionError("delta length does not match environmental variables");
  if (p.d() != d) throw DimensionError("rho_u dimension does not match endogenous count");
  if (p.rho_v.size() != d) throw DimensionError("rho_v dimension mismatch");
  if (d > 0 && (p.gamma.rows() != m.q || p.gamma.cols() != d))
    throw DimensionError("gamma must be q x d");
  if (p.d_eta.size() != d) throw DimensionError("d_eta dimension mismatch");
  if (p.c_eta_lower.size() != d * (d - 1) / 2)
    throw DimensionError("c_eta_lower dimension mismatch");
}

}  // namespace sfa
