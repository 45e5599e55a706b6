#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "prodspill/panel.hpp"

using namespace prodspill;

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

// Three firms, year gap for B, rows deliberately unsorted.
PanelData small_panel() {
  PanelData p;
  auto add = [&](const std::string& f, int year, double y, double g) {
    p.firm_id.push_back(f);
    p.year.push_back(year);
    p.Y.push_back(y);
    p.K.push_back(2.0 * y);
    p.L.push_back(3.0);
    p.M.push_back(0.5 * y);
    p.G.push_back(g);
    p.region.push_back(f == "C" ? "R2" : "R1");
    p.industry.push_back("I1");
  };
  add("B", 2000, 10.0, 0.2);
  add("A", 2001, 20.0, 0.3);
  add("A", 2000, 30.0, 0.1);
  add("B", 2002, 40.0, 0.4);  // gap: no 2001 row for B
  add("C", 2000, 50.0, 0.5);
  add("C", 2001, 60.0, 0.6);
  return p;
}

}  // namespace

TEST_SUITE("panel") {

TEST_CASE("finalize sorts and indexes") {
  PanelData p = small_panel();
  p.finalize();
  REQUIRE(p.n_obs() == 6);
  REQUIRE(p.n_firms() == 3);
  CHECK(p.firm_labels() == std::vector<std::string>{"A", "B", "C"});
  // Sorted by (firm, year): A2000 A2001 B2000 B2002 C2000 C2001.
  CHECK(p.firm_id[0] == "A");
  CHECK(p.year[0] == 2000);
  CHECK(p.Y[0] == 30.0);
  CHECK(p.firm_id[3] == "B");
  CHECK(p.year[3] == 2002);
  // Contiguous firm indices.
  CHECK(p.firm(0) == 0);
  CHECK(p.firm(2) == 1);
  CHECK(p.firm(5) == 2);
  // Key lookup.
  CHECK(p.obs_at(0, 2001) == 1);
  CHECK(p.obs_at(1, 2001) == -1);
  CHECK(p.obs_at(2, 2000) == 4);
}

TEST_CASE("lag resolves previous year within firm only") {
  PanelData p = small_panel();
  p.finalize();
  CHECK(p.lag(0) == -1);          // A 2000: first year
  CHECK(p.lag(1) == 0);           // A 2001 -> A 2000
  CHECK(p.lag(3) == -1);          // B 2002: 2001 missing
  CHECK(p.lag(5) == 4);           // C 2001 -> C 2000

  std::vector<LagPair> pairs = lag_align(p);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].current == 1);
  CHECK(pairs[0].lagged == 0);
  CHECK(pairs[1].current == 5);
  CHECK(pairs[1].lagged == 4);
}

TEST_CASE("finalize validation errors") {
  PanelData dup = small_panel();
  dup.firm_id.push_back("A");
  dup.year.push_back(2000);
  dup.Y.push_back(1.0);
  dup.K.push_back(1.0);
  dup.L.push_back(1.0);
  dup.M.push_back(1.0);
  dup.G.push_back(0.5);
  dup.region.push_back("R1");
  dup.industry.push_back("I1");
  CHECK_THROWS_AS(dup.finalize(), std::invalid_argument);

  PanelData bad_y = small_panel();
  bad_y.Y[2] = 0.0;
  CHECK_THROWS_AS(bad_y.finalize(), std::invalid_argument);

  PanelData bad_len = small_panel();
  bad_len.K.pop_back();
  CHECK_THROWS_AS(bad_len.finalize(), std::invalid_argument);
}

TEST_CASE("G bounds enforced unless relaxed; NaN G allowed") {
  PanelData p = small_panel();
  p.G[1] = 1.4;
  CHECK_THROWS_AS(p.finalize(), std::invalid_argument);
  PanelData q = small_panel();
  q.G[1] = 1.4;
  q.finalize(/*relax_g=*/true);
  PanelData r = small_panel();
  r.G[1] = kNaN;
  r.finalize();  // missing modifier is legal
  PanelData s = small_panel();
  s.G[1] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(s.finalize(), std::invalid_argument);
}

TEST_CASE("prices default to one and apply by year") {
  PriceSeries ps;
  CHECK(ps.p_y(1999) == 1.0);
  CHECK(ps.p_m(1999) == 1.0);
  ps.set(2000, 1.1, 0.9);
  CHECK(ps.p_y(2000) == 1.1);
  CHECK(ps.p_m(2000) == 0.9);
  CHECK(ps.p_y(2001) == 1.0);
  CHECK_THROWS_AS(ps.set(2001, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("log share uses prices") {
  PanelData p = small_panel();
  p.prices.set(2000, 2.0, 1.5);
  p.finalize();
  // Row 0 is A 2000: Y=30, M=15.
  ShareValue s = log_share(p, 0);
  CHECK(s.V == doctest::Approx(1.5 * 15.0 / (2.0 * 30.0)).epsilon(1e-15));
  CHECK(s.lnV == doctest::Approx(std::log(s.V)).epsilon(1e-15));
  // Row 1 is A 2001: default prices.
  ShareValue t = log_share(p, 1);
  CHECK(t.V == doctest::Approx(10.0 / 20.0).epsilon(1e-15));
}

TEST_CASE("csv round trip preserves all columns") {
  PanelData p = small_panel();
  p.omega_true.assign(6, 0.0);
  for (int i = 0; i < 6; ++i) p.omega_true[i] = 0.1 * i;
  p.omega_true[4] = kNaN;
  p.has_omega_true = true;
  p.finalize();

  const std::string path = "test_panel_roundtrip.csv";
  write_panel_csv(p, path);
  PanelData q = load_panel_csv(path);
  std::remove(path.c_str());

  REQUIRE(q.n_obs() == p.n_obs());
  for (int i = 0; i < p.n_obs(); ++i) {
    CHECK(q.firm_id[i] == p.firm_id[i]);
    CHECK(q.year[i] == p.year[i]);
    CHECK(q.Y[i] == doctest::Approx(p.Y[i]).epsilon(1e-12));
    CHECK(q.K[i] == doctest::Approx(p.K[i]).epsilon(1e-12));
    CHECK(q.L[i] == doctest::Approx(p.L[i]).epsilon(1e-12));
    CHECK(q.M[i] == doctest::Approx(p.M[i]).epsilon(1e-12));
    CHECK(q.G[i] == doctest::Approx(p.G[i]).epsilon(1e-12));
    CHECK(q.region[i] == p.region[i]);
    CHECK(q.industry[i] == p.industry[i]);
    if (std::isnan(p.omega_true[i])) {
      CHECK(std::isnan(q.omega_true[i]));
    } else {
      CHECK(q.omega_true[i] == doctest::Approx(p.omega_true[i]).epsilon(1e-12));
    }
  }
  CHECK(q.has_omega_true);
}

TEST_CASE("prices csv round trip") {
  PriceSeries ps;
  ps.set(2000, 1.25, 0.75);
  ps.set(2001, 1.5, 0.8);
  const std::string path = "test_prices_roundtrip.csv";
  write_prices_csv(ps, path, {2000, 2001});
  PriceSeries qs = load_prices_csv(path);
  std::remove(path.c_str());
  CHECK(qs.p_y(2000) == doctest::Approx(1.25).epsilon(1e-12));
  CHECK(qs.p_m(2000) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(qs.p_y(2001) == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(qs.p_m(2001) == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("missing file raises") {
  CHECK_THROWS(load_panel_csv("definitely_not_here_1234.csv"));
}

}  // TEST_SUITE
