#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "prodspill/estimator.hpp"
#include "prodspill/panel.hpp"
#include "prodspill/peers.hpp"

namespace prodspill {

// First step shared with the main estimator: production elasticities and
// recovered productivity from a fit whose evolution sieve conditions only on
// lagged own productivity (no G, no spatial state).
struct AltFirstStep {
  ProductionFit fit;
  std::vector<double> omega;
};

AltFirstStep alt_first_step(const PanelData& panel, const EstimateOptions& options);

// Second-step linear models of recovered productivity.
//   alt1: omega_it on [1, sum_j s_ij,t-1 G_j,t-2, G_i,t-1]
//   alt2: omega_it on [1, sum_j s_ij,t-1 omega_j,t-1, G_i,t-1]
enum class AltModel { alt1, alt2 };

// Timing variants of the spillover/own-G regressors. Spill values are either
// peer G or peer productivity; subscripts give the lag of the weight row and
// value. Contemporaneous variants (I, II, VIII, IX) are estimated by
// just-identified IV with first lags of the non-constant regressors as
// instruments.
//   I    (peer G, t;    none)      II   (peer G, t;    own G, t)
//   III  (peer G, t-1;  none)      IV   (peer G, t-1;  own G, t-1)
//   V    (peer G, t-2;  none)      VI   (peer G, t-2;  own G, t-2)
//   VII  (peer G, t-2;  own G, t-1)
//   VIII (peer omega, t;   none)   IX   (peer omega, t;   own G, t)
//   X    (peer omega, t-1; none)   XI   (peer omega, t-1; own G, t-1)
enum class AltVariant { I, II, III, IV, V, VI, VII, VIII, IX, X, XI };

struct AltRegression {
  std::vector<std::string> names;  // regressor names, constant first
  Eigen::VectorXd coef;
  Eigen::VectorXd se_classical;
  Eigen::VectorXd se_robust;
  Eigen::VectorXd z;  // coef / se_robust
  int n_rows = 0;
  bool iv = false;
  int spill_index = 1;  // column of the spillover regressor
};

AltRegression alt_two_step(const PanelData& panel, const std::vector<double>& omega,
                           const PeerWeights& weights, AltModel model);

AltRegression alt_variant(const PanelData& panel, const std::vector<double>& omega,
                          const PeerWeights& weights, AltVariant variant);

const char* alt_variant_name(AltVariant variant);
std::vector<AltVariant> all_alt_variants();

}  // namespace prodspill
