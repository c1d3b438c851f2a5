#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sfa/dataset.hpp"
#include "sfa/inference.hpp"

namespace sfa {

// Replication design: two frontier regressors (X1 exogenous, X2 endogenous),
// two environmental variables (Z1 exogenous, Z2 endogenous), instruments
// W = (1, X1, Z1, W1, W2).  The exogenous block (X1, Z1, W1, W2) is
// equicorrelated standard normal with correlation 0.5; (V, eta_X, eta_Z) is
// joint normal; U0 = |U0*| with U0* conditionally normal given eta.
enum class McSetting { S1, S2, Custom };

struct McFlags {
  bool wald_ci = true;
  bool subsample_ci = false;
  bool lr_tests = false;
  bool efficiency = true;
};

struct McConfig {
  McSetting setting = McSetting::S1;
  int n = 500;
  int replications = 100;
  std::uint64_t seed = 0;
  McFlags compute;
  std::optional<ParamVector> custom_theta;  // for McSetting::Custom
  SubsampleOptions subsample;
  int lr_draws = 10000;
  double ci_level = 0.95;
};

// Layout shared by all settings.
Model mc_model();

// True parameter vector of a setting (S1: rho_u = 0; S2: rho_u = (0.5,0.5)).
ParamVector mc_truth(const McConfig& cfg);

// Deterministic given (cfg.seed, replication_index); returns the dataset and
// the realized inefficiency draw U = U0 g(Z, delta).
std::pair<Dataset, Eigen::VectorXd> simulate_dataset(const McConfig& cfg,
                                                     int replication_index);

struct McParamRow {
  std::string name;
  double truth = 0.0;
  double mean = 0.0;
  double sd = 0.0;
  double avg_se = 0.0;            // NaN when not computed
  double wald_coverage = 0.0;     // NaN when not computed
  double subsample_coverage = 0.0;
};

struct McTestRow {
  std::string name;  // "rho_u_zero" or "rho_u_interior"
  double level = 0.0;
  double rejection_rate = 0.0;
  int replications = 0;
};

struct McTeSummary {
  bool present = false;
  double min = 0.0, q1 = 0.0, median = 0.0, mean = 0.0, q3 = 0.0, max = 0.0;
};

struct McReport {
  std::string setting;
  int n = 0;
  int replications = 0;
  std::uint64_t seed = 0;
  int failed = 0;
  int wald_failures = 0;
  int subsample_failures = 0;
  std::vector<McParamRow> rows;
  std::vector<McTestRow> tests;
  McTeSummary te;
  std::string diagnostics;
};

// Simulate-fit-aggregate.  Replications run in parallel on per-replication
// RNG streams; failed replications are excluded and counted (more than 10%
// failures flips a diagnostic instead of throwing).
McReport run_monte_carlo(const McConfig& cfg);

}  // namespace sfa
