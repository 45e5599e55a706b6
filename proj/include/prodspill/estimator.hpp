#pragma once

// Two-stage estimator of the production function with a controlled,
// cross-sectionally dependent productivity process. Stage 1 identifies the
// material elasticity (and transitory shocks) from revenue shares; stage 2
// runs sieve nonlinear least squares on the proxied productivity process,
// with the sieve coefficients profiled out. Effects are analytic derivatives
// of the fitted process.

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "prodspill/panel.hpp"
#include "prodspill/peers.hpp"
#include "prodspill/sieve.hpp"

namespace prodspill {

enum class ProdSpec { cobb_douglas, translog };
enum class PeerScheme { baseline, size, asymmetric, fdi_split };

// Group dummies appended to the stage-2 linear subproblem; prefix semantics
// as in PeerGrouping.
struct FixedEffectSpec {
  bool enabled = false;
  int region_prefix = -1;
  int industry_prefix = -1;
};

struct EstimateOptions {
  ProdSpec spec = ProdSpec::cobb_douglas;
  int sieve_degree = 2;
  PeerScheme scheme = PeerScheme::baseline;
  PeerGrouping grouping;  // default: one common peer group
  int rank_lag = 1;       // asymmetric ranking lag of a weight row vs its own year
  FixedEffectSpec fixed_effects;
  bool time_effects = false;
  // Productivity-process regressors; the exogenous-Markov first step of the
  // alternative estimators disables both.
  bool include_g = true;
  bool include_spatial = true;
  // Rows whose stage-2 peer aggregates needed renormalization are kept by
  // default; true drops them instead.
  bool drop_renormalized = false;
  // Labor elasticity estimated unless log-labor has zero variance; override
  // to force either mode.
  std::optional<bool> use_labor;
  int multistart = 16;
  double multistart_halfwidth = 0.5;
};

struct Stage1Fit {
  ProdSpec spec = ProdSpec::cobb_douglas;
  double ln_betaM_theta = 0.0;  // log of the share-equation level
  double theta = 1.0;
  double beta_M = 0.0;
  double beta_MM = 0.0, beta_KM = 0.0, beta_LM = 0.0;  // translog curvature
  std::vector<double> eta;  // per observation; mean zero over the sample
};

// Closed-form share-equation estimator: ln(beta_M theta) = mean lnV,
// theta = mean exp{mean lnV - lnV}, eta = ln(beta_M theta) - lnV.
Stage1Fit stage1_cobb_douglas(const std::vector<double>& lnv);

// Nonlinear least squares of lnV on ln(material elasticity x theta) with the
// elasticity linear in (m, k, l); reduces to the closed form when the
// curvature terms are zero.
Stage1Fit stage1_translog(const std::vector<double>& lnv, const std::vector<double>& m,
                          const std::vector<double>& k, const std::vector<double>& l,
                          bool use_labor);

// Already-identified productivity component per observation:
// kappa = (1 - beta_M) m - ln(beta_M theta) + ln(P_M/P_Y), with the quadratic
// material terms subtracted under the translog.
std::vector<double> identified_component(const PanelData& panel, const Stage1Fit& stage1);

// Which state variables the fitted productivity process has.
struct ZLayout {
  bool g = true;
  bool sp0 = false;   // bidimensional spatial lag over G <= 0 peers
  bool sp1 = false;   // bidimensional spatial lag over G > 0 peers
  bool sp = true;     // unidimensional spatial lag

  int n_vars() const { return 1 + (g ? 1 : 0) + (sp ? 1 : 0) + (sp0 ? 1 : 0) + (sp1 ? 1 : 0); }
  int idx_omega() const { return 0; }
  int idx_g() const { return 1; }  // valid when g
  int idx_sp() const { return 1 + (g ? 1 : 0); }
  int idx_sp0() const { return 1 + (g ? 1 : 0); }
  int idx_sp1() const { return idx_sp0() + (sp0 ? 1 : 0); }
};

struct ProductionFit {
  ProdSpec spec = ProdSpec::cobb_douglas;
  bool use_labor = false;
  // Stage 1.
  double theta = 1.0;
  double ln_betaM_theta = 0.0;
  double beta_M = 0.0, beta_MM = 0.0, beta_KM = 0.0, beta_LM = 0.0;
  // Stage 2.
  double beta_K = 0.0, beta_L = 0.0, beta_KK = 0.0, beta_LL = 0.0, beta_KL = 0.0;
  Eigen::VectorXd gamma;  // sieve coefficients on the scaled basis
  int sieve_degree = 2;
  ZLayout layout;
  ZScaling scaling;       // applied to z before basis expansion
  double sse = 0.0;       // stage-2 objective (sum of squares) at the optimum
  bool converged = false;

  // Fixed/time effect coefficients with their group labels (reference level
  // dropped and listed first with coefficient 0).
  std::vector<std::string> fe_labels;
  Eigen::VectorXd fe_coef;
  std::vector<int> time_labels;
  Eigen::VectorXd time_coef;

  // Per-observation series (NaN where undefined).
  std::vector<double> eta;       // stage-1 transitory shock
  std::vector<double> omega;     // recovered log-productivity
  std::vector<double> zeta;      // stage-2 innovation (estimation rows only)
  std::vector<double> fitted_y;  // structural fitted log output (estimation rows only)
  std::vector<int> rows;         // estimation-sample observation indices
  long renormalized_peers = 0;   // stage-2 weight-row adjustments

  Eigen::VectorXd beta() const;          // stacked production coefficients
  void set_beta(const Eigen::VectorXd&);
};

struct EffectEstimates {
  std::vector<double> AR, DL, SP, SP0, SP1, TIL;  // per observation, NaN when undefined
};

struct EstimationResult {
  ProductionFit fit;
  EffectEstimates effects;
};

// Full pipeline on a panel: shares -> stage 1 -> stage 2 -> effects.
EstimationResult estimate(const PanelData& panel, const EstimateOptions& options);

// Pipeline on externally supplied log-share and log-output vectors (the
// bootstrap rebuilds these); beta_init with multistart_override = 0 warm
// starts the stage-2 optimizer.
ProductionFit estimate_with_data(const PanelData& panel, const EstimateOptions& options,
                                 const std::vector<double>& lnv, const std::vector<double>& y_log,
                                 const Eigen::VectorXd* beta_init = nullptr,
                                 int multistart_override = -1);

// Analytic derivatives of the fitted productivity process evaluated at each
// observation's own state on the given panel (weights rebuilt there), mapped
// back through the scaling by the chain rule.
EffectEstimates derive_effects(const PanelData& panel, const ProductionFit& fit,
                               const EstimateOptions& options);

// Recovered log-productivity per observation at the fit's parameters.
std::vector<double> recover_productivity(const PanelData& panel, const ProductionFit& fit);

}  // namespace prodspill
