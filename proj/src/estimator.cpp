#include "prodspill/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "prodspill/linreg.hpp"
#include "prodspill/optim.hpp"
#include "prodspill/stats.hpp"

namespace prodspill {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

int x_dim(ProdSpec spec, bool use_labor) {
  if (spec == ProdSpec::cobb_douglas) return use_labor ? 2 : 1;
  return use_labor ? 5 : 2;
}

// Production regressors paired with the stacked coefficient order of
// ProductionFit::beta(): CD (k[, l]); translog (k, k^2/2[, l, l^2/2, k l]).
void fill_x(double k, double l, ProdSpec spec, bool use_labor, double* out) {
  if (spec == ProdSpec::cobb_douglas) {
    out[0] = k;
    if (use_labor) out[1] = l;
    return;
  }
  out[0] = k;
  out[1] = 0.5 * k * k;
  if (use_labor) {
    out[2] = l;
    out[3] = 0.5 * l * l;
    out[4] = k * l;
  }
}

std::vector<double> log_of(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  for (size_t i = 0; i < v.size(); ++i) out[i] = std::log(v[i]);
  return out;
}

// Material elasticity at one observation.
double material_elasticity(const Stage1Fit& s1, double m, double k, double l) {
  return s1.beta_M + s1.beta_MM * m + s1.beta_KM * k + s1.beta_LM * l;
}

// Stage-1-identified materials terms of log output.
double material_terms(const Stage1Fit& s1, double m, double k, double l) {
  double t = s1.beta_M * m;
  if (s1.spec == ProdSpec::translog) {
    t += 0.5 * s1.beta_MM * m * m + s1.beta_KM * k * m + s1.beta_LM * l * m;
  }
  return t;
}

}  // namespace

Eigen::VectorXd ProductionFit::beta() const {
  Eigen::VectorXd b(x_dim(spec, use_labor));
  if (spec == ProdSpec::cobb_douglas) {
    b[0] = beta_K;
    if (use_labor) b[1] = beta_L;
  } else {
    b[0] = beta_K;
    b[1] = beta_KK;
    if (use_labor) {
      b[2] = beta_L;
      b[3] = beta_LL;
      b[4] = beta_KL;
    }
  }
  return b;
}

void ProductionFit::set_beta(const Eigen::VectorXd& b) {
  if (b.size() != x_dim(spec, use_labor)) {
    throw std::invalid_argument("ProductionFit::set_beta: wrong length");
  }
  if (spec == ProdSpec::cobb_douglas) {
    beta_K = b[0];
    if (use_labor) beta_L = b[1];
  } else {
    beta_K = b[0];
    beta_KK = b[1];
    if (use_labor) {
      beta_L = b[2];
      beta_LL = b[3];
      beta_KL = b[4];
    }
  }
}

// ---------------------------------------------------------------------------
// Stage 1
// ---------------------------------------------------------------------------

Stage1Fit stage1_cobb_douglas(const std::vector<double>& lnv) {
  if (lnv.empty()) throw std::invalid_argument("stage1_cobb_douglas: no observations");
  Stage1Fit fit;
  fit.spec = ProdSpec::cobb_douglas;
  double m = mean(lnv);
  fit.ln_betaM_theta = m;
  fit.eta.resize(lnv.size());
  double theta = 0.0;
  for (size_t i = 0; i < lnv.size(); ++i) {
    fit.eta[i] = m - lnv[i];
    theta += std::exp(fit.eta[i]);
  }
  fit.theta = theta / static_cast<double>(lnv.size());
  fit.beta_M = std::exp(m) / fit.theta;
  return fit;
}

Stage1Fit stage1_translog(const std::vector<double>& lnv, const std::vector<double>& m,
                          const std::vector<double>& k, const std::vector<double>& l,
                          bool use_labor) {
  const size_t n = lnv.size();
  if (n == 0) throw std::invalid_argument("stage1_translog: no observations");
  if (m.size() != n || k.size() != n || l.size() != n) {
    throw std::invalid_argument("stage1_translog: input length mismatch");
  }

  // Elasticity normalized by its level: elas = beta_M (1 + b.w) with
  // w = (m, k[, l]); the level ln(beta_M theta) is profiled out, which keeps
  // the fit invariant to the scale split between beta_M and theta.
  const int d = use_labor ? 3 : 2;
  auto profile = [&](const Eigen::VectorXd& b, std::vector<double>* log_norm,
                     double* c_out) -> double {
    std::vector<double> ln_norm(n);
    for (size_t i = 0; i < n; ++i) {
      double norm = 1.0 + b[0] * m[i] + b[1] * k[i] + (use_labor ? b[2] * l[i] : 0.0);
      if (!(norm > 0.0)) return std::numeric_limits<double>::infinity();
      ln_norm[i] = std::log(norm);
    }
    double c = 0.0;
    for (size_t i = 0; i < n; ++i) c += lnv[i] - ln_norm[i];
    c /= static_cast<double>(n);
    double sse = 0.0;
    for (size_t i = 0; i < n; ++i) {
      double r = lnv[i] - c - ln_norm[i];
      sse += r * r;
    }
    if (log_norm) *log_norm = std::move(ln_norm);
    if (c_out) *c_out = c;
    return sse / static_cast<double>(n);
  };

  Objective f = [&](const Eigen::VectorXd& b) { return profile(b, nullptr, nullptr); };
  Eigen::VectorXd b0 = Eigen::VectorXd::Zero(d);
  OptimResult opt = minimize_multistart(f, b0, 0.1, 8);
  if (!opt.converged) {
    throw std::runtime_error("stage1_translog: optimizer did not converge (objective " +
                             std::to_string(opt.value) + ", gradient norm " +
                             std::to_string(opt.grad_norm) + ")");
  }

  std::vector<double> ln_norm;
  double c = 0.0;
  profile(opt.x, &ln_norm, &c);

  Stage1Fit fit;
  fit.spec = ProdSpec::translog;
  fit.ln_betaM_theta = c;
  fit.eta.resize(n);
  double theta = 0.0;
  for (size_t i = 0; i < n; ++i) {
    fit.eta[i] = c + ln_norm[i] - lnv[i];
    theta += std::exp(fit.eta[i]);
  }
  fit.theta = theta / static_cast<double>(n);
  fit.beta_M = std::exp(c) / fit.theta;
  fit.beta_MM = fit.beta_M * opt.x[0];
  fit.beta_KM = fit.beta_M * opt.x[1];
  fit.beta_LM = use_labor ? fit.beta_M * opt.x[2] : 0.0;
  return fit;
}

// ---------------------------------------------------------------------------
// Identified component and productivity recovery
// ---------------------------------------------------------------------------

namespace {

std::vector<double> kappa_vector(const PanelData& panel, const Stage1Fit& s1) {
  std::vector<double> kappa(panel.n_obs());
  for (int i = 0; i < panel.n_obs(); ++i) {
    double m = std::log(panel.M[i]);
    double k = std::log(panel.K[i]);
    double l = std::log(panel.L[i]);
    double price = std::log(panel.prices.p_m(panel.year[i]) / panel.prices.p_y(panel.year[i]));
    if (s1.spec == ProdSpec::cobb_douglas) {
      kappa[i] = (1.0 - s1.beta_M) * m - s1.ln_betaM_theta + price;
    } else {
      double elas = material_elasticity(s1, m, k, l);
      if (!(elas > 0.0)) {
        throw std::runtime_error("identified_component: non-positive material elasticity at firm " +
                                 panel.firm_id[i] + ", year " + std::to_string(panel.year[i]));
      }
      kappa[i] = price - std::log(elas * s1.theta) + (1.0 - s1.beta_M) * m -
                 0.5 * s1.beta_MM * m * m - s1.beta_KM * k * m - s1.beta_LM * l * m;
    }
  }
  return kappa;
}

Stage1Fit stage1_of(const ProductionFit& fit) {
  Stage1Fit s1;
  s1.spec = fit.spec;
  s1.ln_betaM_theta = fit.ln_betaM_theta;
  s1.theta = fit.theta;
  s1.beta_M = fit.beta_M;
  s1.beta_MM = fit.beta_MM;
  s1.beta_KM = fit.beta_KM;
  s1.beta_LM = fit.beta_LM;
  return s1;
}

}  // namespace

std::vector<double> identified_component(const PanelData& panel, const Stage1Fit& stage1) {
  return kappa_vector(panel, stage1);
}

std::vector<double> recover_productivity(const PanelData& panel, const ProductionFit& fit) {
  std::vector<double> kappa = kappa_vector(panel, stage1_of(fit));
  Eigen::VectorXd beta = fit.beta();
  std::vector<double> omega(panel.n_obs());
  std::vector<double> x(beta.size());
  for (int i = 0; i < panel.n_obs(); ++i) {
    fill_x(std::log(panel.K[i]), std::log(panel.L[i]), fit.spec, fit.use_labor, x.data());
    double xb = 0.0;
    for (Eigen::Index c = 0; c < beta.size(); ++c) xb += x[c] * beta[c];
    omega[i] = kappa[i] - xb;
  }
  return omega;
}

// ---------------------------------------------------------------------------
// Stage 2
// ---------------------------------------------------------------------------

namespace {

struct WeightsBundle {
  PeerWeights main;   // unidimensional spatial lag
  PeerWeights side0;  // bidimensional: peers with G <= 0
  PeerWeights side1;  // bidimensional: peers with G > 0
  bool bidim = false;
};

WeightsBundle build_weights_for(const PanelData& panel, const EstimateOptions& options,
                                const std::vector<double>& ranking) {
  WeightsBundle w;
  switch (options.scheme) {
    case PeerScheme::baseline:
      w.main = build_weights_baseline(panel, options.grouping);
      break;
    case PeerScheme::size:
      w.main = build_weights_size(panel, options.grouping);
      break;
    case PeerScheme::asymmetric:
      w.main = build_weights_asymmetric(panel, options.grouping, ranking, options.rank_lag);
      break;
    case PeerScheme::fdi_split: {
      BidimensionalWeights bw = build_weights_fdi_split(panel, options.grouping);
      w.side0 = std::move(bw.side0);
      w.side1 = std::move(bw.side1);
      w.bidim = true;
      break;
    }
  }
  return w;
}

bool any_row(const PeerWeights& w) {
  for (const auto& r : w.rows) {
    if (!r.empty()) return true;
  }
  return false;
}

ZLayout make_layout(const EstimateOptions& options, const WeightsBundle& weights) {
  ZLayout layout;
  layout.g = options.include_g;
  layout.sp = false;
  layout.sp0 = layout.sp1 = false;
  if (options.include_spatial) {
    if (weights.bidim) {
      // A side with no peers anywhere is dropped as a state dimension.
      layout.sp0 = any_row(weights.side0);
      layout.sp1 = any_row(weights.side1);
    } else {
      layout.sp = true;
    }
  }
  return layout;
}

// Beta-independent stage-2 data: estimation rows, outcomes, regressor blocks,
// and spatial-lag caches (the lag of omega* is linear in beta, so only the
// lags of kappa and of the x block are needed).
struct Stage2Problem {
  std::vector<int> rows;  // current-observation index per estimation row
  Eigen::VectorXd ystar;
  Eigen::MatrixXd xc;      // x at the current observation
  Eigen::MatrixXd xl;      // x at the lag
  Eigen::VectorXd kl;      // kappa at the lag
  Eigen::VectorXd gl;      // G at the lag
  Eigen::VectorXd skl[3];  // spatial lags of kappa (sp, sp0, sp1 slots)
  Eigen::MatrixXd sxl[3];  // spatial lags of the x block
  Eigen::MatrixXd dummies;
  ZLayout layout;
  PolynomialBasis basis{1, 1};
  int n_spatial = 0;       // used slots in skl/sxl
  long renormalized = 0;

  // Scratch reused across objective evaluations.
  Eigen::MatrixXd design;
  Eigen::VectorXd w;
  std::vector<std::vector<double>> zrows;

  int n_rows() const { return static_cast<int>(rows.size()); }

  // Builds z rows at beta, fits the scaling, fills the basis block of
  // `design`, and the adjusted outcome `w`.
  void prepare(const Eigen::VectorXd& beta, ZScaling* scaling_out) {
    const int R = n_rows();
    const int nv = layout.n_vars();
    for (int r = 0; r < R; ++r) {
      auto& z = zrows[r];
      int v = 0;
      z[v++] = kl[r] - xl.row(r).dot(beta);
      if (layout.g) z[v++] = gl[r];
      for (int s = 0; s < n_spatial; ++s) z[v++] = skl[s][r] - sxl[s].row(r).dot(beta);
    }
    ZScaling scaling = fit_scaling(zrows);
    const int L = basis.n_terms();
    std::vector<double> u(nv), arow(L);
    for (int r = 0; r < R; ++r) {
      scaling.apply(zrows[r].data(), u.data());
      basis.eval(u.data(), arow.data());
      for (int c = 0; c < L; ++c) design(r, c) = arow[c];
    }
    w = ystar - xc * beta;
    if (scaling_out) *scaling_out = scaling;
  }

  double objective(const Eigen::VectorXd& beta) {
    prepare(beta, nullptr);
    Eigen::VectorXd coef = solve_least_squares(design, w);
    return (w - design * coef).squaredNorm() / static_cast<double>(n_rows());
  }
};

}  // namespace

ProductionFit estimate_with_data(const PanelData& panel, const EstimateOptions& options,
                                 const std::vector<double>& lnv,
                                 const std::vector<double>& y_log,
                                 const Eigen::VectorXd* beta_init, int multistart_override) {
  if (options.sieve_degree < 1) {
    throw std::invalid_argument("estimate: sieve degree must be >= 1");
  }
  const int N = panel.n_obs();
  if (static_cast<int>(lnv.size()) != N || static_cast<int>(y_log.size()) != N) {
    throw std::invalid_argument("estimate: lnv/y length mismatch with panel");
  }

  std::vector<double> m = log_of(panel.M), k = log_of(panel.K), l = log_of(panel.L);
  bool use_labor = options.use_labor.value_or(sample_sd(l) > 1e-12);

  // Stage 1.
  Stage1Fit s1 = options.spec == ProdSpec::cobb_douglas
                     ? stage1_cobb_douglas(lnv)
                     : stage1_translog(lnv, m, k, l, use_labor);
  std::vector<double> kappa = kappa_vector(panel, s1);

  // Peer weights; the asymmetric scheme ranks by recovered productivity from
  // a baseline-weights pass.
  WeightsBundle weights;
  if (options.scheme == PeerScheme::asymmetric) {
    EstimateOptions pass1 = options;
    pass1.scheme = PeerScheme::baseline;
    ProductionFit fit1 = estimate_with_data(panel, pass1, lnv, y_log, beta_init,
                                            multistart_override);
    weights = build_weights_for(panel, options, fit1.omega);
  } else {
    weights = build_weights_for(panel, options, {});
  }

  ZLayout layout = make_layout(options, weights);
  const int dx = x_dim(options.spec, use_labor);

  // Estimation rows: observation with a lag whose state is fully defined.
  const PeerWeights* spats[3];
  int n_spatial = 0;
  if (layout.sp) spats[n_spatial++] = &weights.main;
  if (layout.sp0) spats[n_spatial++] = &weights.side0;
  if (layout.sp1) spats[n_spatial++] = &weights.side1;

  std::vector<int> rows;
  for (int i = 0; i < N; ++i) {
    int lag = panel.lag(i);
    if (lag < 0) continue;
    if (layout.g && std::isnan(panel.G[lag])) continue;
    bool ok = true;
    for (int s = 0; s < n_spatial; ++s) ok = ok && !spats[s]->empty_row(lag);
    if (ok) rows.push_back(i);
  }
  if (static_cast<int>(rows.size()) <= layout.n_vars() + dx + 1) {
    throw std::runtime_error("estimate: too few usable estimation rows (" +
                             std::to_string(rows.size()) + ")");
  }

  Stage2Problem prob;
  prob.layout = layout;
  prob.n_spatial = n_spatial;
  prob.basis = PolynomialBasis(layout.n_vars(), options.sieve_degree);

  const int R = static_cast<int>(rows.size());
  prob.rows = rows;
  prob.ystar.resize(R);
  prob.xc.resize(R, dx);
  prob.xl.resize(R, dx);
  prob.kl.resize(R);
  prob.gl.resize(R);
  for (int s = 0; s < n_spatial; ++s) {
    prob.skl[s].resize(R);
    prob.sxl[s].resize(R, dx);
  }

  std::vector<double> xbuf(dx);
  // Per-observation x columns for the spatial caches.
  std::vector<std::vector<double>> xcols(dx, std::vector<double>(N));
  for (int i = 0; i < N; ++i) {
    fill_x(k[i], l[i], options.spec, use_labor, xbuf.data());
    for (int c = 0; c < dx; ++c) xcols[c][i] = xbuf[c];
  }

  std::vector<char> row_renormalized(R, 0);
  for (int r = 0; r < R; ++r) {
    int i = rows[r];
    int lag = panel.lag(i);
    prob.ystar[r] = y_log[i] - material_terms(s1, m[i], k[i], l[i]);
    fill_x(k[i], l[i], options.spec, use_labor, xbuf.data());
    for (int c = 0; c < dx; ++c) prob.xc(r, c) = xbuf[c];
    fill_x(k[lag], l[lag], options.spec, use_labor, xbuf.data());
    for (int c = 0; c < dx; ++c) prob.xl(r, c) = xbuf[c];
    prob.kl[r] = kappa[lag];
    prob.gl[r] = layout.g ? panel.G[lag] : 0.0;
    for (int s = 0; s < n_spatial; ++s) {
      long skipped = 0;
      prob.skl[s][r] = spatial_lag_renormalized(*spats[s], kappa, lag, &skipped);
      for (int c = 0; c < dx; ++c) {
        prob.sxl[s](r, c) = spatial_lag_renormalized(*spats[s], xcols[c], lag, &skipped);
      }
      if (skipped > 0) {
        row_renormalized[r] = 1;
        prob.renormalized += skipped;
      }
    }
  }
  if (options.drop_renormalized && prob.renormalized > 0) {
    // Rebuild the problem over the clean rows only.
    std::vector<int> keep;
    for (int r = 0; r < R; ++r) {
      if (!row_renormalized[r]) keep.push_back(r);
    }
    Stage2Problem clean;
    clean.layout = layout;
    clean.n_spatial = n_spatial;
    clean.basis = prob.basis;
    clean.renormalized = prob.renormalized;
    const int Rc = static_cast<int>(keep.size());
    clean.rows.resize(Rc);
    clean.ystar.resize(Rc);
    clean.xc.resize(Rc, dx);
    clean.xl.resize(Rc, dx);
    clean.kl.resize(Rc);
    clean.gl.resize(Rc);
    for (int s = 0; s < n_spatial; ++s) {
      clean.skl[s].resize(Rc);
      clean.sxl[s].resize(Rc, dx);
    }
    for (int rc = 0; rc < Rc; ++rc) {
      int r = keep[rc];
      clean.rows[rc] = prob.rows[r];
      clean.ystar[rc] = prob.ystar[r];
      clean.xc.row(rc) = prob.xc.row(r);
      clean.xl.row(rc) = prob.xl.row(r);
      clean.kl[rc] = prob.kl[r];
      clean.gl[rc] = prob.gl[r];
      for (int s = 0; s < n_spatial; ++s) {
        clean.skl[s][rc] = prob.skl[s][r];
        clean.sxl[s].row(rc) = prob.sxl[s].row(r);
      }
    }
    prob = std::move(clean);
  }

  // Fixed-effect and time dummies over estimation rows (reference dropped).
  std::vector<std::string> fe_labels;
  std::vector<int> time_labels;
  {
    const int Rr = prob.n_rows();
    int n_fe = 0, n_time = 0;
    std::vector<int> fe_idx(Rr, 0), time_idx(Rr, 0);
    if (options.fixed_effects.enabled) {
      PeerGrouping fe_group{options.fixed_effects.region_prefix,
                            options.fixed_effects.industry_prefix};
      std::set<std::string> labels;
      for (int r = 0; r < Rr; ++r) labels.insert(fe_group.key(panel, prob.rows[r]));
      fe_labels.assign(labels.begin(), labels.end());
      for (int r = 0; r < Rr; ++r) {
        fe_idx[r] = static_cast<int>(
            std::distance(fe_labels.begin(),
                          std::find(fe_labels.begin(), fe_labels.end(),
                                    fe_group.key(panel, prob.rows[r]))));
      }
      n_fe = static_cast<int>(fe_labels.size()) - 1;
    }
    if (options.time_effects) {
      std::set<int> years;
      for (int r = 0; r < Rr; ++r) years.insert(panel.year[prob.rows[r]]);
      time_labels.assign(years.begin(), years.end());
      for (int r = 0; r < Rr; ++r) {
        time_idx[r] = static_cast<int>(
            std::distance(time_labels.begin(),
                          std::find(time_labels.begin(), time_labels.end(),
                                    panel.year[prob.rows[r]])));
      }
      n_time = static_cast<int>(time_labels.size()) - 1;
    }
    prob.dummies = Eigen::MatrixXd::Zero(Rr, n_fe + n_time);
    for (int r = 0; r < Rr; ++r) {
      if (fe_idx[r] > 0) prob.dummies(r, fe_idx[r] - 1) = 1.0;
      if (time_idx[r] > 0) prob.dummies(r, n_fe + time_idx[r] - 1) = 1.0;
    }
  }

  // Assemble the reusable design matrix: [basis | dummies].
  {
    const int Rr = prob.n_rows();
    const int L = prob.basis.n_terms();
    const int nd = static_cast<int>(prob.dummies.cols());
    if (Rr <= L + nd + dx) {
      throw std::runtime_error("estimate: estimation sample too small for the sieve (" +
                               std::to_string(Rr) + " rows, " + std::to_string(L + nd) +
                               " linear parameters)");
    }
    prob.design.resize(Rr, L + nd);
    prob.design.rightCols(nd) = prob.dummies;
    prob.zrows.assign(Rr, std::vector<double>(layout.n_vars(), 0.0));
  }

  // Outer optimization over beta with the linear block profiled out.
  Eigen::VectorXd b0;
  if (beta_init) {
    b0 = *beta_init;
    if (b0.size() != dx) throw std::invalid_argument("estimate: beta_init has wrong length");
  } else {
    Eigen::MatrixXd Xi(prob.n_rows(), dx + 1);
    Xi.col(0).setOnes();
    Xi.rightCols(dx) = prob.xc;
    Eigen::VectorXd ols = solve_least_squares(Xi, prob.ystar);
    b0 = ols.tail(dx);
  }

  // First evaluation outside the optimizer so genuine rank problems surface
  // with diagnostics instead of being masked as +inf.
  prob.objective(b0);

  Objective f = [&prob](const Eigen::VectorXd& b) -> double {
    try {
      return prob.objective(b);
    } catch (const std::exception&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  int n_starts = multistart_override >= 0 ? multistart_override : options.multistart;
  OptimResult opt = minimize_multistart(f, b0, options.multistart_halfwidth, n_starts);

  // Final linear solve at the optimum.
  ZScaling scaling;
  prob.prepare(opt.x, &scaling);
  Eigen::VectorXd coef = solve_least_squares(prob.design, prob.w);
  Eigen::VectorXd resid = prob.w - prob.design * coef;
  const int L = prob.basis.n_terms();

  ProductionFit fit;
  fit.spec = options.spec;
  fit.use_labor = use_labor;
  fit.theta = s1.theta;
  fit.ln_betaM_theta = s1.ln_betaM_theta;
  fit.beta_M = s1.beta_M;
  fit.beta_MM = s1.beta_MM;
  fit.beta_KM = s1.beta_KM;
  fit.beta_LM = s1.beta_LM;
  fit.set_beta(opt.x);
  fit.gamma = coef.head(L);
  fit.sieve_degree = options.sieve_degree;
  fit.layout = prob.layout;
  fit.scaling = scaling;
  fit.sse = resid.squaredNorm();
  fit.converged = opt.converged;
  fit.renormalized_peers = prob.renormalized;

  int n_fe = fe_labels.empty() ? 0 : static_cast<int>(fe_labels.size()) - 1;
  fit.fe_labels = fe_labels;
  fit.fe_coef = Eigen::VectorXd::Zero(fe_labels.empty() ? 0 : n_fe + 1);
  if (n_fe > 0) fit.fe_coef.tail(n_fe) = coef.segment(L, n_fe);
  fit.time_labels = time_labels;
  int n_time = time_labels.empty() ? 0 : static_cast<int>(time_labels.size()) - 1;
  fit.time_coef = Eigen::VectorXd::Zero(time_labels.empty() ? 0 : n_time + 1);
  if (n_time > 0) fit.time_coef.tail(n_time) = coef.segment(L + n_fe, n_time);

  fit.eta = s1.eta;
  fit.omega.assign(N, 0.0);
  {
    Eigen::VectorXd beta = fit.beta();
    for (int i = 0; i < N; ++i) {
      double xb = 0.0;
      fill_x(k[i], l[i], options.spec, use_labor, xbuf.data());
      for (int c = 0; c < dx; ++c) xb += xbuf[c] * beta[c];
      fit.omega[i] = kappa[i] - xb;
    }
  }
  fit.zeta.assign(N, kNaN);
  fit.fitted_y.assign(N, kNaN);
  fit.rows = prob.rows;
  for (int r = 0; r < prob.n_rows(); ++r) {
    int i = prob.rows[r];
    fit.zeta[i] = resid[r] - s1.eta[i];
    fit.fitted_y[i] = y_log[i] - resid[r];
  }
  return fit;
}

EstimationResult estimate(const PanelData& panel, const EstimateOptions& options) {
  std::vector<double> lnv(panel.n_obs()), y_log(panel.n_obs());
  for (int i = 0; i < panel.n_obs(); ++i) {
    lnv[i] = log_share(panel, i).lnV;
    y_log[i] = std::log(panel.Y[i]);
  }
  EstimationResult result;
  result.fit = estimate_with_data(panel, options, lnv, y_log);
  result.effects = derive_effects(panel, result.fit, options);
  return result;
}

// ---------------------------------------------------------------------------
// Effects
// ---------------------------------------------------------------------------

EffectEstimates derive_effects(const PanelData& panel, const ProductionFit& fit,
                               const EstimateOptions& options) {
  const int N = panel.n_obs();
  const ZLayout& layout = fit.layout;
  PolynomialBasis basis(layout.n_vars(), fit.sieve_degree);
  if (basis.n_terms() != fit.gamma.size()) {
    throw std::invalid_argument("derive_effects: sieve coefficient length does not match layout");
  }

  std::vector<double> omega = recover_productivity(panel, fit);
  WeightsBundle weights = build_weights_for(panel, options, omega);

  const PeerWeights* spats[3];
  int slot_var[3];
  int n_spatial = 0;
  if (layout.sp) {
    spats[n_spatial] = &weights.main;
    slot_var[n_spatial++] = layout.idx_sp();
  }
  if (layout.sp0) {
    spats[n_spatial] = &weights.side0;
    slot_var[n_spatial++] = layout.idx_sp0();
  }
  if (layout.sp1) {
    spats[n_spatial] = &weights.side1;
    slot_var[n_spatial++] = layout.idx_sp1();
  }

  EffectEstimates eff;
  eff.AR.assign(N, kNaN);
  eff.DL.assign(N, kNaN);
  eff.SP.assign(N, kNaN);
  eff.SP0.assign(N, kNaN);
  eff.SP1.assign(N, kNaN);
  eff.TIL.assign(N, kNaN);

  const int nv = layout.n_vars();
  std::vector<double> z(nv), u(nv), grad(nv);
  std::vector<double> gamma(fit.gamma.data(), fit.gamma.data() + fit.gamma.size());

  for (int i = 0; i < N; ++i) {
    if (layout.g && std::isnan(panel.G[i])) continue;
    bool ok = true;
    for (int s = 0; s < n_spatial; ++s) ok = ok && !spats[s]->empty_row(i);
    if (!ok) continue;

    z[layout.idx_omega()] = omega[i];
    if (layout.g) z[layout.idx_g()] = panel.G[i];
    bool defined = true;
    for (int s = 0; s < n_spatial; ++s) {
      double v = spatial_lag_renormalized(*spats[s], omega, i, nullptr);
      if (std::isnan(v)) defined = false;
      z[slot_var[s]] = v;
    }
    if (!defined) continue;

    fit.scaling.apply(z.data(), u.data());
    basis.value_gradient(u.data(), gamma.data(), grad.data());
    // Chain rule back to the unscaled state.
    eff.AR[i] = grad[layout.idx_omega()] / fit.scaling.sd[layout.idx_omega()];
    if (layout.g) eff.DL[i] = grad[layout.idx_g()] / fit.scaling.sd[layout.idx_g()];
    if (layout.sp) eff.SP[i] = grad[layout.idx_sp()] / fit.scaling.sd[layout.idx_sp()];
    if (layout.sp0) eff.SP0[i] = grad[layout.idx_sp0()] / fit.scaling.sd[layout.idx_sp0()];
    if (layout.sp1) eff.SP1[i] = grad[layout.idx_sp1()] / fit.scaling.sd[layout.idx_sp1()];
  }

  // Indirect effect: own spillover sensitivity times the peers' direct
  // learning one year back, renormalized over peers with a defined DL.
  if (layout.g && n_spatial > 0) {
    for (int i = 0; i < N; ++i) {
      int prev = panel.obs_at(panel.firm(i), panel.year[i] - 1);
      if (prev < 0) continue;
      double til = 0.0;
      bool defined = false;
      for (int s = 0; s < n_spatial; ++s) {
        double own_sp = layout.sp ? eff.SP[i] : (slot_var[s] == layout.idx_sp0() ? eff.SP0[i]
                                                                                 : eff.SP1[i]);
        if (std::isnan(own_sp) || spats[s]->empty_row(prev)) continue;
        double peer_dl = spatial_lag_renormalized(*spats[s], eff.DL, prev, nullptr);
        if (std::isnan(peer_dl)) continue;
        til += own_sp * peer_dl;
        defined = true;
      }
      if (defined) eff.TIL[i] = til;
    }
  }
  return eff;
}

}  // namespace prodspill
