#include "prodspill/alternatives.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "prodspill/linreg.hpp"

namespace prodspill {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Value series shifted one year back within each firm.
std::vector<double> lag_series(const PanelData& panel, const std::vector<double>& values) {
  std::vector<double> out(panel.n_obs(), kNaN);
  for (int i = 0; i < panel.n_obs(); ++i) {
    int prev = panel.lag(i);
    if (prev >= 0) out[i] = values[prev];
  }
  return out;
}

// Spatial lag of `values` taken at the observation d years before obs i,
// using that observation's own weight row; NaN when the row or any needed
// value is unavailable.
double spill_at(const PanelData& panel, const PeerWeights& weights,
                const std::vector<double>& values, int i, int d) {
  int o = i;
  for (int step = 0; step < d; ++step) {
    o = panel.lag(o);
    if (o < 0) return kNaN;
  }
  if (weights.empty_row(o)) return kNaN;
  return spatial_lag_renormalized(weights, values, o, nullptr);
}

// Own value d years back.
double own_at(const PanelData& panel, const std::vector<double>& values, int i, int d) {
  int o = i;
  for (int step = 0; step < d; ++step) {
    o = panel.lag(o);
    if (o < 0) return kNaN;
  }
  return values[o];
}

AltRegression run_regression(const std::vector<std::vector<double>>& cols,
                             const std::vector<std::vector<double>>& inst_cols,
                             const std::vector<double>& outcome,
                             std::vector<std::string> names, bool iv) {
  const int N = static_cast<int>(outcome.size());
  const int p = static_cast<int>(cols.size());
  std::vector<int> rows;
  for (int i = 0; i < N; ++i) {
    bool ok = !std::isnan(outcome[i]);
    for (const auto& c : cols) ok = ok && !std::isnan(c[i]);
    for (const auto& c : inst_cols) ok = ok && !std::isnan(c[i]);
    if (ok) rows.push_back(i);
  }
  const int R = static_cast<int>(rows.size());
  if (R <= p + 1) {
    throw std::runtime_error("alternative estimator: too few usable rows (" +
                             std::to_string(R) + ")");
  }
  Eigen::MatrixXd X(R, p + 1);
  Eigen::VectorXd y(R);
  X.col(0).setOnes();
  for (int r = 0; r < R; ++r) {
    y[r] = outcome[rows[r]];
    for (int c = 0; c < p; ++c) X(r, c + 1) = cols[c][rows[r]];
  }
  RegressionResult reg;
  if (iv) {
    Eigen::MatrixXd Z(R, p + 1);
    Z.col(0).setOnes();
    for (int r = 0; r < R; ++r) {
      for (int c = 0; c < p; ++c) Z(r, c + 1) = inst_cols[c][rows[r]];
    }
    reg = iv_just_identified(X, Z, y);
  } else {
    reg = ols(X, y);
  }
  AltRegression out;
  out.names = std::move(names);
  out.coef = reg.coef;
  out.se_classical = reg.se_classical;
  out.se_robust = reg.se_robust;
  out.z = reg.z;
  out.n_rows = R;
  out.iv = iv;
  out.spill_index = 1;
  return out;
}

}  // namespace

AltFirstStep alt_first_step(const PanelData& panel, const EstimateOptions& options) {
  EstimateOptions o = options;
  o.include_g = false;
  o.include_spatial = false;
  std::vector<double> lnv(panel.n_obs()), y_log(panel.n_obs());
  for (int i = 0; i < panel.n_obs(); ++i) {
    lnv[i] = log_share(panel, i).lnV;
    y_log[i] = std::log(panel.Y[i]);
  }
  AltFirstStep out;
  out.fit = estimate_with_data(panel, o, lnv, y_log);
  out.omega = out.fit.omega;
  return out;
}

AltRegression alt_two_step(const PanelData& panel, const std::vector<double>& omega,
                           const PeerWeights& weights, AltModel model) {
  const int N = panel.n_obs();
  std::vector<double> spill(N, kNaN), own_g(N, kNaN);
  std::vector<double> lag_g = lag_series(panel, panel.G);
  for (int i = 0; i < N; ++i) {
    if (model == AltModel::alt1) {
      // Weight row one year back, peer G two years back.
      spill[i] = spill_at(panel, weights, lag_g, i, 1);
    } else {
      spill[i] = spill_at(panel, weights, omega, i, 1);
    }
    own_g[i] = own_at(panel, panel.G, i, 1);
  }
  std::vector<std::string> names{"const",
                                 model == AltModel::alt1 ? "peer_g" : "peer_omega",
                                 "own_g"};
  return run_regression({spill, own_g}, {}, omega, std::move(names), false);
}

AltRegression alt_variant(const PanelData& panel, const std::vector<double>& omega,
                          const PeerWeights& weights, AltVariant variant) {
  struct Def {
    bool spill_is_g;
    int spill_lag;
    int own_lag;  // -1: no own-G regressor
    bool iv;
  };
  Def def{};
  switch (variant) {
    case AltVariant::I:    def = {true, 0, -1, true}; break;
    case AltVariant::II:   def = {true, 0, 0, true}; break;
    case AltVariant::III:  def = {true, 1, -1, false}; break;
    case AltVariant::IV:   def = {true, 1, 1, false}; break;
    case AltVariant::V:    def = {true, 2, -1, false}; break;
    case AltVariant::VI:   def = {true, 2, 2, false}; break;
    case AltVariant::VII:  def = {true, 2, 1, false}; break;
    case AltVariant::VIII: def = {false, 0, -1, true}; break;
    case AltVariant::IX:   def = {false, 0, 0, true}; break;
    case AltVariant::X:    def = {false, 1, -1, false}; break;
    case AltVariant::XI:   def = {false, 1, 1, false}; break;
  }
  const int N = panel.n_obs();
  const std::vector<double>& vals = def.spill_is_g ? panel.G : omega;

  std::vector<std::vector<double>> cols, inst;
  std::vector<std::string> names{"const"};
  std::vector<double> spill(N, kNaN);
  for (int i = 0; i < N; ++i) spill[i] = spill_at(panel, weights, vals, i, def.spill_lag);
  cols.push_back(spill);
  std::string base = def.spill_is_g ? "peer_g" : "peer_omega";
  names.push_back(base + "_lag" + std::to_string(def.spill_lag));
  if (def.own_lag >= 0) {
    std::vector<double> own(N, kNaN);
    for (int i = 0; i < N; ++i) own[i] = own_at(panel, panel.G, i, def.own_lag);
    cols.push_back(own);
    names.push_back("own_g_lag" + std::to_string(def.own_lag));
  }
  if (def.iv) {
    // First lags instrument the contemporaneous regressors.
    std::vector<double> spill_l(N, kNaN);
    for (int i = 0; i < N; ++i) {
      spill_l[i] = spill_at(panel, weights, vals, i, def.spill_lag + 1);
    }
    inst.push_back(spill_l);
    if (def.own_lag >= 0) {
      std::vector<double> own_l(N, kNaN);
      for (int i = 0; i < N; ++i) own_l[i] = own_at(panel, panel.G, i, def.own_lag + 1);
      inst.push_back(own_l);
    }
  }
  return run_regression(cols, inst, omega, std::move(names), def.iv);
}

const char* alt_variant_name(AltVariant variant) {
  switch (variant) {
    case AltVariant::I: return "I";
    case AltVariant::II: return "II";
    case AltVariant::III: return "III";
    case AltVariant::IV: return "IV";
    case AltVariant::V: return "V";
    case AltVariant::VI: return "VI";
    case AltVariant::VII: return "VII";
    case AltVariant::VIII: return "VIII";
    case AltVariant::IX: return "IX";
    case AltVariant::X: return "X";
    case AltVariant::XI: return "XI";
  }
  return "?";
}

std::vector<AltVariant> all_alt_variants() {
  return {AltVariant::I, AltVariant::II, AltVariant::III, AltVariant::IV,
          AltVariant::V, AltVariant::VI, AltVariant::VII, AltVariant::VIII,
          AltVariant::IX, AltVariant::X, AltVariant::XI};
}

}  // namespace prodspill
