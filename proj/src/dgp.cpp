#include "prodspill/dgp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "prodspill/rng.hpp"

namespace prodspill {

void DgpConfig::apply_scenario() {
  if (scenario == Scenario::i) return;
  // Scenario ii: G has no direct effect on productivity.
  lin.rho3 = 0.0;
  nl.rho31 = nl.rho32 = nl.varrho13 = nl.lambda23 = 0.0;
  if (scenario == Scenario::iii) {
    // Scenario iii: additionally no cross-firm spillovers.
    lin.rho2 = 0.0;
    nl.rho21 = nl.rho22 = nl.varrho12 = 0.0;
  }
}

void DgpConfig::validate() const {
  if (n < 2 || T < 2) throw std::invalid_argument("DgpConfig: need n >= 2 and T >= 2");
  if (!(beta_M > 0.0 && beta_M < 1.0)) {
    throw std::invalid_argument("DgpConfig: beta_M must lie in (0,1)");
  }
  if (sigma_eta < 0.0 || sigma_zeta < 0.0 || sigma_eps < 0.0) {
    throw std::invalid_argument("DgpConfig: standard deviations must be non-negative");
  }
  if (delta_set.empty()) throw std::invalid_argument("DgpConfig: delta_set empty");
  for (double d : delta_set) {
    if (d < 0.0 || d >= 1.0) {
      throw std::invalid_argument("DgpConfig: depreciation rates must lie in [0,1)");
    }
  }
  if (!(K0_min > 0.0) || K0_max < K0_min) {
    throw std::invalid_argument("DgpConfig: invalid K0 range");
  }
  if (omega0_max < omega0_min) {
    throw std::invalid_argument("DgpConfig: invalid initial-draw range");
  }
  if (!(gamma1 < 1.0)) {
    throw std::invalid_argument("DgpConfig: gamma1 must be below 1");
  }
}

double evolve_productivity_mean(double omega_prev, double g_prev, double spatlag_prev,
                                const DgpConfig& config) {
  if (config.omega_process == OmegaProcess::linear) {
    const auto& p = config.lin;
    return p.rho0 + p.rho1 * omega_prev + p.rho2 * spatlag_prev + p.rho3 * g_prev;
  }
  const auto& p = config.nl;
  return p.rho0 + p.rho11 * omega_prev + p.rho12 * omega_prev * omega_prev +
         p.rho21 * spatlag_prev + p.rho22 * spatlag_prev * spatlag_prev +
         p.rho31 * g_prev + p.rho32 * g_prev * g_prev +
         p.varrho12 * omega_prev * spatlag_prev + p.varrho13 * omega_prev * g_prev +
         p.lambda23 * g_prev * spatlag_prev;
}

double evolve_g_mean(double g_prev, double productivity_input, const DgpConfig& config) {
  return config.gamma0 + config.gamma1 * g_prev + config.gamma2 * productivity_input;
}

MeanPaths deterministic_mean_paths(const DgpConfig& config) {
  // Baseline productivity decay: own persistence only, shocks off, policy and
  // cross-firm channels excluded. This is the no-intervention reference path,
  // so it is the same in every scenario. The exogenous G process starts at the
  // period-0 recursion value and keeps tracking the linear baseline decay; for
  // the nonlinear productivity process the exogenous drive stops after the
  // initial period, leaving a plain autoregression.
  MeanPaths p;
  p.omega.resize(config.T);
  p.g.resize(config.T);
  p.omega[0] = 0.5 * (config.omega0_min + config.omega0_max);
  p.g[0] = config.gamma0 + config.gamma2 * p.omega[0];
  const bool track = config.omega_process == OmegaProcess::linear;
  for (int t = 1; t < config.T; ++t) {
    double prev = p.omega[t - 1];
    if (config.omega_process == OmegaProcess::linear) {
      p.omega[t] = config.lin.rho0 + config.lin.rho1 * prev;
    } else {
      p.omega[t] = config.nl.rho0 + config.nl.rho11 * prev + config.nl.rho12 * prev * prev;
    }
    p.g[t] = evolve_g_mean(p.g[t - 1], track ? p.omega[t] : 0.0, config);
  }
  return p;
}

double material_demand(double K, double omega, double beta_K, double beta_M) {
  if (!(K > 0.0)) throw std::invalid_argument("material_demand: K must be positive");
  if (!(beta_M > 0.0 && beta_M < 1.0)) {
    throw std::invalid_argument("material_demand: beta_M must lie in (0,1)");
  }
  return std::pow(beta_M * std::pow(K, beta_K) * std::exp(omega), 1.0 / (1.0 - beta_M));
}

// ---------------------------------------------------------------------------
// JSON round trip
// ---------------------------------------------------------------------------

namespace {

// Central string tables so parsing and serialization cannot drift apart.
std::string to_string(GProcess g) {
  return g == GProcess::exogenous ? "exogenous" : "controlled";
}
std::string to_string(OmegaProcess p) {
  return p == OmegaProcess::linear ? "linear" : "nonlinear";
}
std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::i: return "i";
    case Scenario::ii: return "ii";
    default: return "iii";
  }
}

GProcess g_process_from(const std::string& s) {
  if (s == "exogenous") return GProcess::exogenous;
  if (s == "controlled") return GProcess::controlled;
  throw std::invalid_argument("DgpConfig: unknown g_process '" + s + "'");
}
OmegaProcess omega_process_from(const std::string& s) {
  if (s == "linear") return OmegaProcess::linear;
  if (s == "nonlinear") return OmegaProcess::nonlinear;
  throw std::invalid_argument("DgpConfig: unknown omega_process '" + s + "'");
}
Scenario scenario_from(const std::string& s) {
  if (s == "i") return Scenario::i;
  if (s == "ii") return Scenario::ii;
  if (s == "iii") return Scenario::iii;
  throw std::invalid_argument("DgpConfig: unknown scenario '" + s + "'");
}

}  // namespace

DgpConfig dgp_config_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  DgpConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("n", c.n);
  get("T", c.T);
  get("beta_K", c.beta_K);
  get("beta_M", c.beta_M);
  get("sigma_eta", c.sigma_eta);
  get("delta_set", c.delta_set);
  get("K0_min", c.K0_min);
  get("K0_max", c.K0_max);
  get("alpha1", c.alpha1);
  get("alpha2", c.alpha2);
  if (j.contains("g_process")) c.g_process = g_process_from(j.at("g_process"));
  get("gamma0", c.gamma0);
  get("gamma1", c.gamma1);
  get("gamma2", c.gamma2);
  get("sigma_eps", c.sigma_eps);
  if (j.contains("omega_process")) c.omega_process = omega_process_from(j.at("omega_process"));
  get("rho0", c.lin.rho0);
  get("rho1", c.lin.rho1);
  get("rho2", c.lin.rho2);
  get("rho3", c.lin.rho3);
  get("nl_rho0", c.nl.rho0);
  get("nl_rho11", c.nl.rho11);
  get("nl_rho12", c.nl.rho12);
  get("nl_rho21", c.nl.rho21);
  get("nl_rho22", c.nl.rho22);
  get("nl_rho31", c.nl.rho31);
  get("nl_rho32", c.nl.rho32);
  get("nl_varrho12", c.nl.varrho12);
  get("nl_varrho13", c.nl.varrho13);
  get("nl_lambda23", c.nl.lambda23);
  get("sigma_zeta", c.sigma_zeta);
  get("omega0_min", c.omega0_min);
  get("omega0_max", c.omega0_max);
  if (j.contains("scenario")) c.scenario = scenario_from(j.at("scenario"));
  get("seed", c.seed);
  c.apply_scenario();
  c.validate();
  return c;
}

std::string dgp_config_to_json(const DgpConfig& c) {
  nlohmann::json j;
  j["n"] = c.n;
  j["T"] = c.T;
  j["beta_K"] = c.beta_K;
  j["beta_M"] = c.beta_M;
  j["sigma_eta"] = c.sigma_eta;
  j["delta_set"] = c.delta_set;
  j["K0_min"] = c.K0_min;
  j["K0_max"] = c.K0_max;
  j["alpha1"] = c.alpha1;
  j["alpha2"] = c.alpha2;
  j["g_process"] = to_string(c.g_process);
  j["gamma0"] = c.gamma0;
  j["gamma1"] = c.gamma1;
  j["gamma2"] = c.gamma2;
  j["sigma_eps"] = c.sigma_eps;
  j["omega_process"] = to_string(c.omega_process);
  j["rho0"] = c.lin.rho0;
  j["rho1"] = c.lin.rho1;
  j["rho2"] = c.lin.rho2;
  j["rho3"] = c.lin.rho3;
  j["nl_rho0"] = c.nl.rho0;
  j["nl_rho11"] = c.nl.rho11;
  j["nl_rho12"] = c.nl.rho12;
  j["nl_rho21"] = c.nl.rho21;
  j["nl_rho22"] = c.nl.rho22;
  j["nl_rho31"] = c.nl.rho31;
  j["nl_rho32"] = c.nl.rho32;
  j["nl_varrho12"] = c.nl.varrho12;
  j["nl_varrho13"] = c.nl.varrho13;
  j["nl_lambda23"] = c.nl.lambda23;
  j["sigma_zeta"] = c.sigma_zeta;
  j["omega0_min"] = c.omega0_min;
  j["omega0_max"] = c.omega0_max;
  j["scenario"] = to_string(c.scenario);
  j["seed"] = c.seed;
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Panel simulation
// ---------------------------------------------------------------------------

namespace {

// True partials of the productivity process mean at last period's state.
void true_partials(double omega_prev, double g_prev, double spatlag_prev,
                   const DgpConfig& c, double& ar, double& dl, double& sp) {
  if (c.omega_process == OmegaProcess::linear) {
    ar = c.lin.rho1;
    dl = c.lin.rho3;
    sp = c.lin.rho2;
    return;
  }
  const auto& p = c.nl;
  ar = p.rho11 + 2.0 * p.rho12 * omega_prev + p.varrho12 * spatlag_prev +
       p.varrho13 * g_prev;
  dl = p.rho31 + 2.0 * p.rho32 * g_prev + p.varrho13 * omega_prev +
       p.lambda23 * spatlag_prev;
  sp = p.rho21 + 2.0 * p.rho22 * spatlag_prev + p.varrho12 * omega_prev +
       p.lambda23 * g_prev;
}

std::string firm_label(int index, int n) {
  int width = 1;
  for (int v = n; v >= 10; v /= 10) ++width;
  std::string digits = std::to_string(index + 1);
  return "F" + std::string(width - static_cast<int>(digits.size()), '0') + digits;
}

}  // namespace

SimulatedPanel simulate_panel(const DgpConfig& config_in) {
  DgpConfig config = config_in;
  config.apply_scenario();
  config.validate();

  const int n = config.n;
  const int T = config.T;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  // One RNG stream per firm; draw order per firm is fixed, so panels are
  // bit-identical however firms are scheduled.
  std::vector<RngStream> streams;
  streams.reserve(n);
  for (int i = 0; i < n; ++i) streams.emplace_back(config.seed, static_cast<uint64_t>(i));

  // State grids indexed [i*T + t].
  auto at = [T](int i, int t) { return i * T + t; };
  std::vector<double> omega(n * T), G(n * T), K(n * T), eta(n * T), zeta(n * T, nan);

  // The exogenous G process starts at the period-0 recursion value and, under
  // the linear productivity process, keeps tracking the deterministic baseline
  // decay; under the nonlinear process it decays as a plain autoregression.
  // The controlled process reacts to each firm's realized productivity and
  // starts at the level implied by the own-persistence fixed point of omega.
  const MeanPaths trend = deterministic_mean_paths(config);
  double g_start = trend.g[0];
  if (config.g_process == GProcess::controlled) {
    double omega_fix;
    if (config.omega_process == OmegaProcess::linear) {
      omega_fix = config.lin.rho0 / (1.0 - config.lin.rho1);
    } else {
      omega_fix = 0.5 * (config.omega0_min + config.omega0_max);
      for (int k = 0; k < 64; ++k) {
        omega_fix = config.nl.rho0 + config.nl.rho11 * omega_fix +
                    config.nl.rho12 * omega_fix * omega_fix;
      }
      if (!std::isfinite(omega_fix)) {
        omega_fix = 0.5 * (config.omega0_min + config.omega0_max);
      }
    }
    g_start = (config.gamma0 + config.gamma2 * omega_fix) / (1.0 - config.gamma1);
  }

  // Initial draws and first-period shocks.
  for (int i = 0; i < n; ++i) {
    omega[at(i, 0)] = streams[i].uniform(config.omega0_min, config.omega0_max);
    K[at(i, 0)] = streams[i].uniform(config.K0_min, config.K0_max);
    G[at(i, 0)] = g_start + config.sigma_eps * streams[i].normal();
    eta[at(i, 0)] = config.sigma_eta * streams[i].normal();
  }

  // Forward recursion; the spatial lag averages last period's peers under
  // the single common group.
  for (int t = 1; t < T; ++t) {
    double omega_sum = 0.0;
    for (int i = 0; i < n; ++i) omega_sum += omega[at(i, t - 1)];
    for (int i = 0; i < n; ++i) {
      double own_prev = omega[at(i, t - 1)];
      double spatlag = (omega_sum - own_prev) / static_cast<double>(n - 1);
      double z = config.sigma_zeta * streams[i].normal();
      zeta[at(i, t)] = z;
      omega[at(i, t)] =
          evolve_productivity_mean(own_prev, G[at(i, t - 1)], spatlag, config) + z;

      double eps = config.sigma_eps * streams[i].normal();
      double g_input;
      if (config.g_process == GProcess::controlled) {
        g_input = omega[at(i, t)];
      } else {
        g_input = config.omega_process == OmegaProcess::linear ? trend.omega[t] : 0.0;
      }
      G[at(i, t)] = evolve_g_mean(G[at(i, t - 1)], g_input, config) + eps;

      double k_prev = K[at(i, t - 1)];
      double invest = std::pow(k_prev, config.alpha1) *
                      std::exp(config.alpha2 * omega[at(i, t - 1)]);
      double delta = config.delta_set[i % config.delta_set.size()];
      K[at(i, t)] = invest + (1.0 - delta) * k_prev;

      eta[at(i, t)] = config.sigma_eta * streams[i].normal();
    }
  }

  // Price normalization: materials price equals the panel sample mean of
  // e^eta, the value the share-based first stage recovers exactly.
  double theta = 0.0;
  for (double e : eta) theta += std::exp(e);
  theta /= static_cast<double>(n * T);

  // True effects at each observation's own state (matching the estimator's
  // evaluation convention); TIL averages peer DL one year back.
  TrueEffects truth;
  truth.AR.assign(n * T, nan);
  truth.DL.assign(n * T, nan);
  truth.SP.assign(n * T, nan);
  truth.TIL.assign(n * T, nan);
  std::vector<double> dl_grid(n * T, nan);
  for (int t = 0; t < T; ++t) {
    double omega_sum = 0.0;
    for (int i = 0; i < n; ++i) omega_sum += omega[at(i, t)];
    for (int i = 0; i < n; ++i) {
      double own = omega[at(i, t)];
      double spatlag = (omega_sum - own) / static_cast<double>(n - 1);
      double ar, dl, sp;
      true_partials(own, G[at(i, t)], spatlag, config, ar, dl, sp);
      truth.AR[at(i, t)] = ar;
      truth.DL[at(i, t)] = dl;
      truth.SP[at(i, t)] = sp;
      dl_grid[at(i, t)] = dl;
    }
  }
  if (config.omega_process == OmegaProcess::linear) {
    double til = config.lin.rho2 * config.lin.rho3;
    for (int i = 0; i < n * T; ++i) truth.TIL[i] = til;
  } else {
    for (int t = 1; t < T; ++t) {
      double dl_sum = 0.0;
      for (int i = 0; i < n; ++i) dl_sum += dl_grid[at(i, t - 1)];
      for (int i = 0; i < n; ++i) {
        double peer_dl = (dl_sum - dl_grid[at(i, t - 1)]) / static_cast<double>(n - 1);
        truth.TIL[at(i, t)] = truth.SP[at(i, t)] * peer_dl;
      }
    }
  }

  // Assemble rows firm-major so finalize()'s sort keeps this order and the
  // eta/zeta/truth vectors stay aligned with the panel.
  SimulatedPanel out;
  PanelData& panel = out.panel;
  const int N = n * T;
  panel.firm_id.reserve(N);
  panel.year.reserve(N);
  out.eta.reserve(N);
  out.zeta.reserve(N);
  out.truth.AR.reserve(N);
  for (int i = 0; i < n; ++i) {
    std::string label = firm_label(i, n);
    for (int t = 0; t < T; ++t) {
      int g = at(i, t);
      double m = material_demand(K[g], omega[g], config.beta_K, config.beta_M);
      double y = std::pow(K[g], config.beta_K) * std::pow(m, config.beta_M) *
                 std::exp(omega[g] + eta[g]);
      panel.firm_id.push_back(label);
      panel.year.push_back(t);
      panel.Y.push_back(y);
      panel.K.push_back(K[g]);
      panel.L.push_back(1.0);
      panel.M.push_back(m);
      panel.G.push_back(G[g]);
      panel.region.push_back("R0");
      panel.industry.push_back("I0");
      panel.omega_true.push_back(omega[g]);
      out.eta.push_back(eta[g]);
      out.zeta.push_back(zeta[g]);
    }
  }
  // Reorder truth grids into the same firm-major layout.
  TrueEffects reordered;
  reordered.AR.reserve(N);
  reordered.DL.reserve(N);
  reordered.SP.reserve(N);
  reordered.TIL.reserve(N);
  for (int i = 0; i < n; ++i) {
    for (int t = 0; t < T; ++t) {
      reordered.AR.push_back(truth.AR[at(i, t)]);
      reordered.DL.push_back(truth.DL[at(i, t)]);
      reordered.SP.push_back(truth.SP[at(i, t)]);
      reordered.TIL.push_back(truth.TIL[at(i, t)]);
    }
  }
  out.truth = std::move(reordered);
  out.theta = theta;
  for (int t = 0; t < T; ++t) panel.prices.set(t, 1.0, theta);
  panel.finalize(/*relax_g=*/true);
  return out;
}

}  // namespace prodspill
