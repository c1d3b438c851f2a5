#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "sfa/params.hpp"

namespace sfa {

// Observation matrix plus column metadata.  w should carry an explicit
// intercept column when the first stage needs one; endo[0] is the coordinate
// whose rho_u entry carries the [0,1] sign normalization.
struct Dataset {
  Eigen::VectorXd y;
  Eigen::MatrixXd x;  // n x px
  Eigen::MatrixXd z;  // n x kz
  Eigen::MatrixXd w;  // n x q
  std::vector<EndoRef> endo;

  std::string y_name;
  std::vector<std::string> x_names, z_names, w_names;

  int n() const { return static_cast<int>(y.size()); }
  int d() const { return static_cast<int>(endo.size()); }

  Eigen::MatrixXd endo_matrix() const;
  std::string endo_name(int i) const;
  Observation row(int i) const;
  Dataset subset(const std::vector<int>& rows) const;
};

// Layout for the endogenous-regressor model; `exogenous` drops the first
// stage entirely (no eta coordinates).
Model model_from(const Dataset& ds, bool exogenous = false);

// Structural invariants: finite entries, q >= #endogenous, X/Z not identical.
void validate_dataset(const Dataset& ds);

}  // namespace sfa
