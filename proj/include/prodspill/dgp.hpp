#pragma once

// Synthetic-panel generator: latent productivity follows a controlled,
// cross-sectionally dependent first-order Markov process; capital accumulates
// from an investment rule; materials come from static expected-profit
// maximization; the productivity modifier G follows an exogenous or
// controlled autoregression. True effect values are recorded per observation.

#include <string>
#include <vector>

#include "prodspill/panel.hpp"

namespace prodspill {

enum class GProcess { exogenous, controlled };
enum class OmegaProcess { linear, nonlinear };
enum class Scenario { i, ii, iii };  // ii: no direct G effect; iii: also no spillover

struct LinearOmegaParams {
  double rho0 = 0.2;
  double rho1 = 0.55;  // own lag
  double rho2 = 0.4;   // spatial lag
  double rho3 = 0.5;   // G lag
};

struct NonlinearOmegaParams {
  double rho0 = 0.2;
  double rho11 = 0.65, rho12 = -0.015;   // own lag, level and square
  double rho21 = 0.18, rho22 = 0.025;    // spatial lag, level and square
  double rho31 = 0.37, rho32 = 0.12;     // G lag, level and square
  double varrho12 = 0.006;               // own x spatial
  double varrho13 = -0.06;               // own x G
  double lambda23 = 0.07;                // G x spatial
};

struct DgpConfig {
  int n = 100;
  int T = 10;
  double beta_K = 0.25;
  double beta_M = 0.65;
  double sigma_eta = 0.2645751311064591;  // sqrt(0.07)
  std::vector<double> delta_set = {0.05, 0.075, 0.10, 0.125, 0.15};
  double K0_min = 10.0, K0_max = 200.0;
  double alpha1 = 0.8, alpha2 = 0.1;  // investment rule I = K^a1 * exp(a2*omega)
  GProcess g_process = GProcess::exogenous;
  double gamma0 = 0.01, gamma1 = 0.6, gamma2 = 0.3, sigma_eps = 0.1;
  OmegaProcess omega_process = OmegaProcess::linear;
  LinearOmegaParams lin;
  NonlinearOmegaParams nl;
  double sigma_zeta = 0.2;
  double omega0_min = 1.0, omega0_max = 3.0;
  Scenario scenario = Scenario::i;
  unsigned long long seed = 1;

  // Zeroes the G-channel coefficients under scenario ii and additionally the
  // spatial-channel coefficients under scenario iii.
  void apply_scenario();
  void validate() const;
};

DgpConfig dgp_config_from_json(const std::string& text);
std::string dgp_config_to_json(const DgpConfig& config);

// Conditional mean of omega_t given last period's state (scenario already
// applied to the coefficient fields).
double evolve_productivity_mean(double omega_prev, double g_prev, double spatlag_prev,
                                const DgpConfig& config);

// Conditional mean of G_t. The productivity input is the firm's own current
// omega for the controlled process; for the exogenous one it is the
// economy-wide deterministic baseline value under the linear productivity
// process (so G shares the secular trend while staying independent of every
// firm-level shock) and zero under the nonlinear process, where the exogenous
// series decays as a plain autoregression after its start.
double evolve_g_mean(double g_prev, double productivity_input, const DgpConfig& config);

// Deterministic mean paths of productivity and G over t = 0..T-1: shocks off
// and every peer at the common mean, which is exact under equal weights. g[0]
// is the period-0 recursion value gamma0 + gamma2 * mean(omega0).
struct MeanPaths {
  std::vector<double> omega, g;
};
MeanPaths deterministic_mean_paths(const DgpConfig& config);

// Static materials choice M = (beta_M K^beta_K e^omega)^{1/(1-beta_M)}.
double material_demand(double K, double omega, double beta_K, double beta_M);

// True partial effects of the productivity process per observation: AR (own
// lag), DL (G lag), SP (spatial lag), and the indirect effect
// TIL_it = SP_it * sum_j s_{ij,t-1} DL_{j,t-1} (NaN in the first year for the
// nonlinear process; constant for the linear one).
struct TrueEffects {
  std::vector<double> AR, DL, SP, TIL;
};

struct SimulatedPanel {
  PanelData panel;  // finalized; includes omega_true and prices P_Y=1, P_M=theta
  TrueEffects truth;
  std::vector<double> eta;   // transitory shock per observation
  std::vector<double> zeta;  // productivity innovation per observation (NaN at t=0)
  double theta = 1.0;        // price normalization: sample mean of e^eta
};

SimulatedPanel simulate_panel(const DgpConfig& config);

}  // namespace prodspill
