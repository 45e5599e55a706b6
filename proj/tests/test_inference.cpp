#include "doctest.h"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "prodspill/dgp.hpp"
#include "prodspill/estimator.hpp"
#include "prodspill/inference.hpp"

using namespace prodspill;

TEST_SUITE("inference") {

TEST_CASE("jackknife acceleration closed form") {
  // mean 7/3; third/second central moments give -60/27 / (6 (42/9)^1.5).
  double a = jackknife_acceleration({1.0, 2.0, 4.0});
  CHECK(a == doctest::Approx(-0.03673889284811709).epsilon(1e-12));
  CHECK(jackknife_acceleration({2.0, 2.0, 2.0}) == 0.0);
  CHECK(jackknife_acceleration({}) == 0.0);
}

// With the point estimate at the median of the draws and zero acceleration
// the interval must coincide with the plain percentile method. Reference
// quantiles computed by hand for draws 1..100 with the linear-interpolation
// quantile definition.
TEST_CASE("interval reduces to percentile when bias and acceleration vanish") {
  std::vector<double> draws(100);
  std::iota(draws.begin(), draws.end(), 1.0);
  std::vector<std::string> warnings;
  BcaInterval iv = bca_interval(50.5, draws, 0.0, 0.05, &warnings);
  CHECK(iv.phi0 == 0.0);
  CHECK(iv.accel == 0.0);
  CHECK(!iv.clamped);
  CHECK(warnings.empty());
  CHECK(iv.point == 50.5);
  CHECK(iv.lo == doctest::Approx(3.475).epsilon(1e-12));
  CHECK(iv.hi == doctest::Approx(97.525).epsilon(1e-12));
  CHECK(iv.one_sided_lower == doctest::Approx(5.95).epsilon(1e-12));
}

TEST_CASE("interval clamps when all draws fall on one side of the point") {
  std::vector<double> draws(100);
  std::iota(draws.begin(), draws.end(), 1.0);
  std::vector<std::string> warnings;

  BcaInterval below = bca_interval(0.5, draws, 0.0, 0.05, &warnings);
  CHECK(below.clamped);
  CHECK(below.lo == 1.0);
  CHECK(below.hi == 1.0);
  CHECK(below.one_sided_lower == 1.0);
  CHECK(warnings.size() == 1);

  BcaInterval above = bca_interval(1000.0, draws, 0.0, 0.05, &warnings);
  CHECK(above.clamped);
  CHECK(above.lo == 100.0);
  CHECK(above.hi == 100.0);
  CHECK(warnings.size() == 2);
}

TEST_CASE("scalar estimands match direct computation") {
  DgpConfig c;
  c.n = 30;
  c.T = 6;
  c.seed = 21;
  SimulatedPanel sim = simulate_panel(c);
  EstimateOptions opts;
  EstimationResult res = estimate(sim.panel, opts);

  auto nan_mean = [](const std::vector<double>& v) {
    double s = 0.0;
    int n = 0;
    for (double x : v) {
      if (std::isnan(x)) continue;
      s += x;
      ++n;
    }
    return s / n;
  };

  std::vector<std::string> names{"beta_K", "beta_M", "theta", "AR", "DL", "SP", "TIL"};
  Eigen::VectorXd vals = evaluate_estimands(names, sim.panel, res.fit, opts);
  REQUIRE(vals.size() == 7);
  CHECK(vals[0] == res.fit.beta_K);
  CHECK(vals[1] == res.fit.beta_M);
  CHECK(vals[2] == res.fit.theta);
  CHECK(vals[3] == doctest::Approx(nan_mean(res.effects.AR)).epsilon(1e-12));
  CHECK(vals[4] == doctest::Approx(nan_mean(res.effects.DL)).epsilon(1e-12));
  CHECK(vals[5] == doctest::Approx(nan_mean(res.effects.SP)).epsilon(1e-12));
  CHECK(vals[6] == doctest::Approx(nan_mean(res.effects.TIL)).epsilon(1e-12));

  CHECK_THROWS(evaluate_estimands({"no_such_estimand"}, sim.panel, res.fit, opts));
  // The baseline layout has no split spillover states.
  CHECK_THROWS(evaluate_estimands({"SP0"}, sim.panel, res.fit, opts));

  CHECK(default_estimand_names(res.fit) ==
        std::vector<std::string>{"beta_K", "beta_M", "AR", "DL", "SP", "TIL"});
}

TEST_CASE("wild bootstrap produces deterministic, well-formed intervals") {
  DgpConfig c;
  c.n = 60;
  c.T = 6;
  c.seed = 33;
  SimulatedPanel sim = simulate_panel(c);
  EstimateOptions opts;
  EstimationResult res = estimate(sim.panel, opts);

  BootstrapOptions bopts;
  bopts.B = 24;
  bopts.seed = 9;
  bopts.max_failure_rate = 0.25;
  std::vector<std::string> estimands{"beta_K", "SP"};

  BootstrapResult r1 = wild_bootstrap_bca(sim.panel, res.fit, opts, estimands, bopts);
  CHECK(r1.B == 24);
  CHECK(r1.n_failed <= 2);
  CHECK(r1.jackknife_groups == 3);  // one group per ~50 firms, floor of 3
  CHECK(r1.names == estimands);
  REQUIRE(r1.draws.cols() == 2);
  CHECK(r1.draws.rows() == r1.B - r1.n_failed);
  REQUIRE(r1.intervals.size() == 2);
  CHECK(r1.intervals[0].name == "beta_K");
  CHECK(r1.intervals[0].point == res.fit.beta_K);
  for (const BcaInterval& iv : r1.intervals) {
    CHECK(std::isfinite(iv.lo));
    CHECK(std::isfinite(iv.hi));
    CHECK(iv.lo <= iv.hi);
    CHECK(std::isfinite(iv.one_sided_lower));
  }

  BootstrapResult r2 = wild_bootstrap_bca(sim.panel, res.fit, opts, estimands, bopts);
  CHECK(r2.n_failed == r1.n_failed);
  for (size_t k = 0; k < r1.intervals.size(); ++k) {
    CHECK(r2.intervals[k].lo == r1.intervals[k].lo);
    CHECK(r2.intervals[k].hi == r1.intervals[k].hi);
    CHECK(r2.intervals[k].phi0 == r1.intervals[k].phi0);
    CHECK(r2.intervals[k].accel == r1.intervals[k].accel);
  }

  BootstrapOptions b5 = bopts;
  b5.jackknife_groups = 5;
  BootstrapResult r3 = wild_bootstrap_bca(sim.panel, res.fit, opts, estimands, b5);
  CHECK(r3.jackknife_groups == 5);
}

}  // TEST_SUITE
