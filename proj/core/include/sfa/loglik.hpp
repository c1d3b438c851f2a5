#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <limits>

#include "sfa/dataset.hpp"

namespace sfa {

// Vectorized log-likelihood over a dataset.  This is the optimizer's hot
// path: it returns -inf at infeasible parameters instead of throwing, so the
// caller can treat feasibility violations as a barrier.
//
// When the first stage is fixed (two-stage estimation) the eta-dependent
// pieces are precomputed once, so each evaluation only touches the
// second-stage parameters.
//
// Instances hold scratch buffers and are not thread-safe; give each thread
// its own evaluator over the shared dataset.
class DatasetLoglik {
 public:
  DatasetLoglik(const Dataset& ds, Model model);

  // Fixes (gamma, d_eta, c_eta) at p's values and precomputes control terms.
  void fix_first_stage(const ParamVector& p);
  void clear_first_stage();
  bool first_stage_fixed() const { return fs_fixed_; }

  // Sum of per-observation log-likelihood contributions.
  double loglik(const ParamVector& p);

  // Same, also filling one contribution per observation.
  double loglik(const ParamVector& p, Eigen::VectorXd& per_obs);

  const Model& model() const { return model_; }
  const Dataset& dataset() const { return *ds_; }

  // The sign-symmetry checks evaluate the likelihood at -rho_u; everything
  // else keeps the rho_u[0] >= 0 barrier on.
  void set_enforce_sign_normalization(bool v) { enforce_sign_ = v; }

 private:
  double eval(const ParamVector& p, Eigen::VectorXd* per_obs);

  const Dataset* ds_;
  Model model_;
  Eigen::MatrixXd endo_;  // n x d endogenous values

  bool fs_fixed_ = false;
  Eigen::LLT<Eigen::MatrixXd> fs_llt_;
  Eigen::MatrixXd fs_t_;        // n x d rows t_i' = eta_i' D^-1 C^-1
  Eigen::VectorXd fs_eta_quad_;  // eta_i' (DCD)^-1 eta_i
  double fs_eta_const_ = 0.0;    // -log|D| - log|C|/2 - d/2 log(2 pi)

  bool enforce_sign_ = true;

  // scratch
  Eigen::VectorXd eps_, g_, omega_, bu_;
  Eigen::MatrixXd eta_scratch_, t_scratch_;
  Eigen::VectorXd quad_scratch_;
};

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace sfa
