#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "prodspill/dgp.hpp"
#include "prodspill/panel.hpp"

using namespace prodspill;

TEST_SUITE("dgp") {

TEST_CASE("scenarios zero the right channels") {
  DgpConfig c;
  // omega = 0.2 + 0.55 w + 0.4 s + 0.5 g at (w, g, s) = (1, 0.5, 2).
  c.apply_scenario();
  CHECK(evolve_productivity_mean(1.0, 0.5, 2.0, c) == doctest::Approx(1.8).epsilon(1e-14));

  DgpConfig c2;
  c2.scenario = Scenario::ii;
  c2.apply_scenario();
  CHECK(evolve_productivity_mean(1.0, 0.5, 2.0, c2) == doctest::Approx(1.55).epsilon(1e-14));

  DgpConfig c3;
  c3.scenario = Scenario::iii;
  c3.apply_scenario();
  CHECK(evolve_productivity_mean(1.0, 0.5, 2.0, c3) == doctest::Approx(0.75).epsilon(1e-14));
}

TEST_CASE("nonlinear evolution arithmetic") {
  DgpConfig c;
  c.omega_process = OmegaProcess::nonlinear;
  c.apply_scenario();
  // 0.2 + 0.65 w - 0.015 w^2 + 0.18 s + 0.025 s^2 + 0.37 g + 0.12 g^2
  //   + 0.006 w s - 0.06 w g + 0.07 g s at (w, g, s) = (1.5, 0.4, 2.0).
  double expect = 0.2 + 0.65 * 1.5 - 0.015 * 2.25 + 0.18 * 2.0 + 0.025 * 4.0 +
                  0.37 * 0.4 + 0.12 * 0.16 + 0.006 * 1.5 * 2.0 - 0.06 * 1.5 * 0.4 +
                  0.07 * 0.4 * 2.0;
  CHECK(evolve_productivity_mean(1.5, 0.4, 2.0, c) == doctest::Approx(expect).epsilon(1e-14));
  CHECK(expect == doctest::Approx(1.80645).epsilon(1e-12));
}

TEST_CASE("g evolution arithmetic") {
  DgpConfig c;
  CHECK(evolve_g_mean(0.5, 1.2, c) == doctest::Approx(0.01 + 0.6 * 0.5 + 0.3 * 1.2).epsilon(1e-14));
}

TEST_CASE("config validation") {
  DgpConfig c;
  c.n = 1;
  CHECK_THROWS_AS(simulate_panel(c), std::invalid_argument);
  DgpConfig c2;
  c2.gamma1 = 1.0;
  CHECK_THROWS_AS(simulate_panel(c2), std::invalid_argument);
  DgpConfig c3;
  c3.beta_M = 1.0;  // material share must stay below one
  CHECK_THROWS_AS(simulate_panel(c3), std::invalid_argument);
}

TEST_CASE("material demand closed form") {
  // M = (beta_M K^beta_K e^omega)^{1/(1-beta_M)}; reference values from an
  // independent evaluation.
  CHECK(material_demand(1.0, 0.0, 0.25, 0.65) ==
        doctest::Approx(0.2920564037930502).epsilon(1e-12));
  CHECK(material_demand(100.0, 2.0, 0.25, 0.65) ==
        doctest::Approx(2375.3133825199902).epsilon(1e-12));
}

// Hand-rolled recursions frozen from omega0 mean = 2: the productivity path
// uses own persistence only, so it is scenario-invariant; the linear G path
// tracks it while the nonlinear G path is a plain autoregression.
TEST_CASE("deterministic mean paths, linear") {
  DgpConfig c;
  c.T = 5;
  MeanPaths p = deterministic_mean_paths(c);
  REQUIRE(p.omega.size() == 5);
  const double om[5] = {2.0, 1.3, 0.915, 0.70325, 0.5867875};
  const double g[5] = {0.61, 0.766, 0.7441, 0.667435, 0.58649725};
  for (int t = 0; t < 5; ++t) {
    CHECK(p.omega[t] == doctest::Approx(om[t]).epsilon(1e-12));
    CHECK(p.g[t] == doctest::Approx(g[t]).epsilon(1e-12));
  }
}

TEST_CASE("deterministic mean paths, nonlinear") {
  DgpConfig c;
  c.T = 4;
  c.omega_process = OmegaProcess::nonlinear;
  MeanPaths p = deterministic_mean_paths(c);
  const double om[4] = {2.0, 1.44, 1.1048959999999999, 0.8998704724377601};
  const double g[4] = {0.61, 0.376, 0.2356, 0.15136};
  for (int t = 0; t < 4; ++t) {
    CHECK(p.omega[t] == doctest::Approx(om[t]).epsilon(1e-12));
    CHECK(p.g[t] == doctest::Approx(g[t]).epsilon(1e-12));
  }
}

TEST_CASE("mean paths are scenario-invariant") {
  for (OmegaProcess op : {OmegaProcess::linear, OmegaProcess::nonlinear}) {
    DgpConfig a, b;
    a.omega_process = b.omega_process = op;
    a.scenario = Scenario::i;
    b.scenario = Scenario::iii;
    MeanPaths pa = deterministic_mean_paths(a);
    MeanPaths pb = deterministic_mean_paths(b);
    for (int t = 0; t < a.T; ++t) {
      CHECK(pa.omega[t] == pb.omega[t]);
      CHECK(pa.g[t] == pb.g[t]);
    }
  }
}

TEST_CASE("simulated share identity holds to 1e-12") {
  DgpConfig c;
  c.n = 40;
  c.T = 6;
  c.seed = 3;
  SimulatedPanel sim = simulate_panel(c);
  const PanelData& p = sim.panel;
  double lb = std::log(c.beta_M * sim.theta);
  for (int i = 0; i < p.n_obs(); ++i) {
    double lnv = log_share(p, i).lnV;
    CHECK(std::abs(lnv - (lb - sim.eta[i])) < 1e-12);
  }
}

TEST_CASE("theta is the sample mean of exp(eta)") {
  DgpConfig c;
  c.n = 25;
  c.T = 5;
  c.seed = 11;
  SimulatedPanel sim = simulate_panel(c);
  double m = 0.0;
  for (double e : sim.eta) m += std::exp(e);
  m /= sim.eta.size();
  CHECK(sim.theta == doctest::Approx(m).epsilon(1e-14));
}

TEST_CASE("output identity and panel structure") {
  DgpConfig c;
  c.n = 30;
  c.T = 8;
  c.seed = 19;
  SimulatedPanel sim = simulate_panel(c);
  const PanelData& p = sim.panel;
  REQUIRE(p.n_obs() == 30 * 8);
  REQUIRE(p.n_firms() == 30);
  for (int i = 0; i < p.n_obs(); ++i) {
    // ln Y = beta_K k + beta_M m + omega + eta.
    double lhs = std::log(p.Y[i]);
    double rhs = c.beta_K * std::log(p.K[i]) + c.beta_M * std::log(p.M[i]) +
                 p.omega_true[i] + sim.eta[i];
    CHECK(std::abs(lhs - rhs) < 1e-10);
    CHECK(p.K[i] > 0.0);
    CHECK(p.L[i] == 1.0);
    CHECK(p.year[i] >= 0);
    CHECK(p.year[i] < 8);
    if (p.year[i] == 0) {
      CHECK(p.omega_true[i] >= 1.0);
      CHECK(p.omega_true[i] < 3.0);
      CHECK(std::isnan(sim.zeta[i]));
    } else {
      CHECK(std::isfinite(sim.zeta[i]));
    }
  }
  CHECK(p.prices.p_m(0) == doctest::Approx(sim.theta).epsilon(1e-14));
  CHECK(p.prices.p_y(0) == 1.0);
}

TEST_CASE("true effects for the linear process") {
  DgpConfig c;
  c.n = 12;
  c.T = 4;
  c.seed = 5;
  SimulatedPanel sim = simulate_panel(c);
  for (size_t i = 0; i < sim.truth.AR.size(); ++i) {
    CHECK(sim.truth.AR[i] == doctest::Approx(0.55).epsilon(1e-14));
    CHECK(sim.truth.DL[i] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(sim.truth.SP[i] == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(sim.truth.TIL[i] == doctest::Approx(0.2).epsilon(1e-14));
  }
  DgpConfig c3 = c;
  c3.scenario = Scenario::iii;
  SimulatedPanel sim3 = simulate_panel(c3);
  for (size_t i = 0; i < sim3.truth.SP.size(); ++i) {
    CHECK(sim3.truth.SP[i] == 0.0);
    CHECK(sim3.truth.DL[i] == 0.0);
    CHECK(sim3.truth.TIL[i] == 0.0);
    CHECK(sim3.truth.AR[i] == doctest::Approx(0.55).epsilon(1e-14));
  }
}

TEST_CASE("g process starting levels") {
  // Exogenous start: period-0 recursion value 0.01 + 0.3 * 2 = 0.61 plus
  // N(0, 0.1^2) noise; firm average within 5 standard errors.
  DgpConfig c;
  c.n = 400;
  c.T = 2;
  c.seed = 101;
  SimulatedPanel sim = simulate_panel(c);
  double sum = 0.0;
  int cnt = 0;
  for (int i = 0; i < sim.panel.n_obs(); ++i) {
    if (sim.panel.year[i] == 0) {
      sum += sim.panel.G[i];
      ++cnt;
    }
  }
  REQUIRE(cnt == 400);
  CHECK(std::abs(sum / cnt - 0.61) < 5.0 * 0.1 / 20.0);

  // Controlled start: long-run level at the own-persistence fixed point,
  // (0.01 + 0.3 * (0.2 / 0.45)) / 0.4.
  DgpConfig cc = c;
  cc.g_process = GProcess::controlled;
  SimulatedPanel simc = simulate_panel(cc);
  sum = 0.0;
  for (int i = 0; i < simc.panel.n_obs(); ++i) {
    if (simc.panel.year[i] == 0) sum += simc.panel.G[i];
  }
  CHECK(std::abs(sum / cnt - 0.35833333333333334) < 5.0 * 0.1 / 20.0);
}

TEST_CASE("exogenous G tracks its deterministic mean path") {
  DgpConfig c;
  c.n = 500;
  c.T = 10;
  c.seed = 77;
  MeanPaths trend = deterministic_mean_paths(c);
  SimulatedPanel sim = simulate_panel(c);
  // Firm-average G per year sits on the path (shocks average out).
  for (int t : {0, 4, 9}) {
    double sum = 0.0;
    int cnt = 0;
    for (int i = 0; i < sim.panel.n_obs(); ++i) {
      if (sim.panel.year[i] == t) {
        sum += sim.panel.G[i];
        ++cnt;
      }
    }
    CHECK(std::abs(sum / cnt - trend.g[t]) < 5.0 * 0.25 / std::sqrt(500.0));
  }

  // Nonlinear exogenous G decays like a plain autoregression instead.
  DgpConfig cn = c;
  cn.omega_process = OmegaProcess::nonlinear;
  MeanPaths tn = deterministic_mean_paths(cn);
  SimulatedPanel simn = simulate_panel(cn);
  double sum9 = 0.0;
  int cnt9 = 0;
  for (int i = 0; i < simn.panel.n_obs(); ++i) {
    if (simn.panel.year[i] == 9) {
      sum9 += simn.panel.G[i];
      ++cnt9;
    }
  }
  CHECK(std::abs(sum9 / cnt9 - tn.g[9]) < 5.0 * 0.25 / std::sqrt(500.0));
  CHECK(tn.g[9] < 0.05);  // far below the linear path's level
}

TEST_CASE("simulation reproducibility and seed sensitivity") {
  DgpConfig c;
  c.n = 15;
  c.T = 5;
  c.seed = 9;
  SimulatedPanel a = simulate_panel(c);
  SimulatedPanel b = simulate_panel(c);
  for (int i = 0; i < a.panel.n_obs(); ++i) {
    CHECK(a.panel.Y[i] == b.panel.Y[i]);
    CHECK(a.panel.G[i] == b.panel.G[i]);
    CHECK(a.panel.omega_true[i] == b.panel.omega_true[i]);
  }
  c.seed = 10;
  SimulatedPanel d = simulate_panel(c);
  CHECK(a.panel.Y[0] != d.panel.Y[0]);
}

// One stream per firm: period-0 draws do not depend on how many other firms
// exist (later periods couple through the spatial lag).
TEST_CASE("initial draws are invariant to the firm count") {
  DgpConfig c;
  c.n = 5;
  c.T = 3;
  c.seed = 21;
  SimulatedPanel small = simulate_panel(c);
  c.n = 9;
  SimulatedPanel big = simulate_panel(c);
  int is = small.panel.obs_at(0, 0);
  int ib = big.panel.obs_at(0, 0);
  REQUIRE(small.panel.firm_labels()[0] == big.panel.firm_labels()[0]);
  CHECK(small.panel.K[is] == big.panel.K[ib]);
  CHECK(small.panel.G[is] == big.panel.G[ib]);
  CHECK(small.panel.omega_true[is] == big.panel.omega_true[ib]);
}

TEST_CASE("config json round trip") {
  DgpConfig c;
  c.n = 123;
  c.T = 7;
  c.seed = 99;
  c.scenario = Scenario::ii;
  c.g_process = GProcess::controlled;
  c.omega_process = OmegaProcess::nonlinear;
  c.sigma_zeta = 0.3;
  c.lin.rho1 = 0.5;
  // Scenario ii zeroes the policy-channel coefficients on deserialization,
  // so probe one it keeps.
  c.nl.rho21 = 0.33;
  c.gamma2 = 0.25;
  c.omega0_max = 4.0;
  DgpConfig d = dgp_config_from_json(dgp_config_to_json(c));
  CHECK(d.n == 123);
  CHECK(d.T == 7);
  CHECK(d.seed == 99);
  CHECK(d.scenario == Scenario::ii);
  CHECK(d.g_process == GProcess::controlled);
  CHECK(d.omega_process == OmegaProcess::nonlinear);
  CHECK(d.sigma_zeta == 0.3);
  CHECK(d.lin.rho1 == 0.5);
  CHECK(d.nl.rho21 == 0.33);
  CHECK(d.gamma2 == 0.25);
  CHECK(d.omega0_max == 4.0);
}

}  // TEST_SUITE
