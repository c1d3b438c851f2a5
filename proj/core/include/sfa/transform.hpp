#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "sfa/params.hpp"

// Mapping between the constrained parameter space and the unconstrained
// coordinates the optimizer works in:
//   log           for sigma2_v, sigma2_u and d_eta entries,
//   atanh         for rho_v, the non-normalized rho_u entries and c_eta_lower,
//   logit         for the normalized rho_u[0] in [0,1],
//   identity      for beta, delta, gamma.
// The joint constraints (C_eta positive definite, rho' C^-1 rho < 1) are not
// encoded in the transform; the likelihood evaluator returns -inf there.

namespace sfa {

enum class FitMode {
  Exogenous,      // no control functions at all
  EndoRhoUZero,   // control functions, rho_u pinned at 0
  EndoFull,       // everything free
  EndoRhoUFixed,  // rho_u pinned at a given vector (interior LR test)
};

class ParamSpace {
 public:
  // `base` supplies dimensions and the values of every block held fixed.
  ParamSpace(const Model& model, FitMode mode, bool two_stage, ParamVector base);

  int dim() const { return dim_; }
  FitMode mode() const { return mode_; }
  bool two_stage() const { return two_stage_; }
  const ParamVector& base() const { return base_; }

  Eigen::VectorXd pack(const ParamVector& p) const;
  ParamVector unpack(const Eigen::VectorXd& t) const;

  // Names of the free coordinates, in pack order (untransformed meaning).
  std::vector<std::string> free_names() const;

 private:
  Model model_;
  FitMode mode_;
  bool two_stage_;
  ParamVector base_;
  int nb_ = 0;  // beta length
  int dim_ = 0;
  bool rho_free_ = false;
  bool rho_u_free_ = false;
  bool first_stage_free_ = false;
};

// Untransformed flattening of the full parameter vector, used for numeric
// Hessians, standard errors and report rows.  Order: beta, delta, sigma2_v,
// sigma2_u, rho_v, rho_u, gamma (column-major), d_eta, c_eta_lower.
Eigen::VectorXd flatten(const ParamVector& p);
ParamVector unflatten(const Eigen::VectorXd& v, const ParamVector& shape);
std::vector<std::string> param_names(const ParamVector& shape,
                                     const std::vector<std::string>& eta_names = {},
                                     const std::vector<std::string>& x_names = {},
                                     const std::vector<std::string>& z_names = {},
                                     const std::vector<std::string>& w_names = {});

}  // namespace sfa
