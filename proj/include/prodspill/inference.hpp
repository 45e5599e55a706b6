#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "prodspill/estimator.hpp"
#include "prodspill/panel.hpp"

namespace prodspill {

struct BootstrapOptions {
  int B = 400;
  double level = 0.95;  // two-sided coverage of (lo, hi) and of the lower bound
  std::uint64_t seed = 1;
  double max_failure_rate = 0.05;
  int jackknife_groups = 0;  // 0: one deletion group per ~50 firms, at least 3
};

struct BcaInterval {
  std::string name;
  double point = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double one_sided_lower = 0.0;
  double phi0 = 0.0;   // bias-correction factor
  double accel = 0.0;  // jackknife acceleration
  bool clamped = false;
};

struct BootstrapResult {
  std::vector<std::string> names;
  Eigen::VectorXd point;
  Eigen::MatrixXd draws;  // successful replications (in replication order) x estimands
  std::vector<BcaInterval> intervals;
  int B = 0;
  int n_failed = 0;
  int jackknife_groups = 0;
  std::vector<std::string> warnings;
};

// Scalar estimands by name: production coefficients (beta_K, beta_L, beta_KK,
// beta_LL, beta_KL, beta_M, beta_MM, beta_KM, beta_LM, theta) and means of
// per-observation effects over defined observations (AR, DL, SP, SP0, SP1,
// TIL). Throws on a name the fit's layout cannot supply.
Eigen::VectorXd evaluate_estimands(const std::vector<std::string>& names,
                                   const PanelData& panel, const ProductionFit& fit,
                                   const EstimateOptions& options);
std::vector<std::string> default_estimand_names(const ProductionFit& fit);

// Acceleration from jackknife estimand values: sum((mean - e_j)^3) /
// (6 [sum((mean - e_j)^2)]^{3/2}); 0 when the denominator vanishes.
double jackknife_acceleration(const std::vector<double>& jackknife_estimates);

// BCa percentile interval from bootstrap draws. `a` is the two-sided
// miscoverage (level 1-a); the one-sided lower bound is taken at the same
// level. When every draw falls on one side of the point estimate the
// bias-correction factor is infinite and the affected endpoints clamp to the
// extreme order statistics (warning appended).
BcaInterval bca_interval(double point, const std::vector<double>& draws, double c_hat,
                         double a, std::vector<std::string>* warnings);

// Wild bootstrap over both estimation stages: one two-point multiplier per
// firm scales the firm's whole residual time series, the share and output
// variables are rebuilt from the fitted structural components, and both
// stages are re-estimated. Intervals are BCa with delete-group jackknife
// acceleration (refit on the reduced panel, estimands evaluated on the full
// panel). Throws when more than max_failure_rate of replications fail.
BootstrapResult wild_bootstrap_bca(const PanelData& panel, const ProductionFit& fit,
                                   const EstimateOptions& options,
                                   const std::vector<std::string>& estimands,
                                   const BootstrapOptions& bopts);

}  // namespace prodspill
