#pragma once

#include <Eigen/Core>

#include "sfa/dataset.hpp"

namespace sfa {

struct FirstStage {
  Eigen::MatrixXd gamma;        // q x d
  Eigen::VectorXd d_eta;        // residual standard deviations (divisor n)
  Eigen::VectorXd c_eta_lower;  // residual correlations, packed lower triangle
  Eigen::MatrixXd residuals;    // n x d control-function residuals
};

// Column-wise least squares of each endogenous variable on W; throws
// SingularDesign when W is rank deficient.
FirstStage first_stage_ols(const Dataset& ds);

}  // namespace sfa
