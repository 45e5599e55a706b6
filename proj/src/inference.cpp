#include "prodspill/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "prodspill/rng.hpp"
#include "prodspill/stats.hpp"

namespace prodspill {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double mean_defined(const std::vector<double>& v) {
  double s = 0.0;
  long n = 0;
  for (double x : v) {
    if (!std::isnan(x)) {
      s += x;
      ++n;
    }
  }
  return n > 0 ? s / static_cast<double>(n) : kNaN;
}

bool is_effect_name(const std::string& name) {
  return name == "AR" || name == "DL" || name == "SP" || name == "SP0" ||
         name == "SP1" || name == "TIL";
}

double scalar_estimand(const std::string& name, const ProductionFit& fit) {
  if (name == "beta_K") return fit.beta_K;
  if (name == "beta_L") return fit.beta_L;
  if (name == "beta_KK") return fit.beta_KK;
  if (name == "beta_LL") return fit.beta_LL;
  if (name == "beta_KL") return fit.beta_KL;
  if (name == "beta_M") return fit.beta_M;
  if (name == "beta_MM") return fit.beta_MM;
  if (name == "beta_KM") return fit.beta_KM;
  if (name == "beta_LM") return fit.beta_LM;
  if (name == "theta") return fit.theta;
  throw std::invalid_argument("unknown estimand: " + name);
}

PanelData panel_without_firms(const PanelData& panel, const std::vector<char>& drop) {
  PanelData out;
  out.prices = panel.prices;
  out.has_omega_true = panel.has_omega_true;
  bool copy_omega = static_cast<int>(panel.omega_true.size()) == panel.n_obs();
  for (int i = 0; i < panel.n_obs(); ++i) {
    if (drop[panel.firm(i)]) continue;
    out.firm_id.push_back(panel.firm_id[i]);
    out.year.push_back(panel.year[i]);
    out.Y.push_back(panel.Y[i]);
    out.K.push_back(panel.K[i]);
    out.L.push_back(panel.L[i]);
    out.M.push_back(panel.M[i]);
    out.G.push_back(panel.G[i]);
    out.region.push_back(panel.region[i]);
    out.industry.push_back(panel.industry[i]);
    if (copy_omega) out.omega_true.push_back(panel.omega_true[i]);
  }
  out.finalize(true);
  return out;
}

}  // namespace

Eigen::VectorXd evaluate_estimands(const std::vector<std::string>& names,
                                   const PanelData& panel, const ProductionFit& fit,
                                   const EstimateOptions& options) {
  bool need_effects = false;
  for (const auto& n : names) need_effects = need_effects || is_effect_name(n);
  EffectEstimates eff;
  if (need_effects) eff = derive_effects(panel, fit, options);

  Eigen::VectorXd out(names.size());
  for (size_t q = 0; q < names.size(); ++q) {
    const std::string& n = names[q];
    if (is_effect_name(n)) {
      const std::vector<double>* v = nullptr;
      if (n == "AR") v = &eff.AR;
      if (n == "DL") v = &eff.DL;
      if (n == "SP") v = &eff.SP;
      if (n == "SP0") v = &eff.SP0;
      if (n == "SP1") v = &eff.SP1;
      if (n == "TIL") v = &eff.TIL;
      double m = mean_defined(*v);
      if (std::isnan(m)) {
        throw std::invalid_argument("estimand " + n +
                                    " has no defined observations under this fit");
      }
      out[q] = m;
    } else {
      out[q] = scalar_estimand(n, fit);
    }
  }
  return out;
}

std::vector<std::string> default_estimand_names(const ProductionFit& fit) {
  std::vector<std::string> names{"beta_K"};
  if (fit.spec == ProdSpec::translog) names.push_back("beta_KK");
  if (fit.use_labor) {
    names.push_back("beta_L");
    if (fit.spec == ProdSpec::translog) {
      names.push_back("beta_LL");
      names.push_back("beta_KL");
    }
  }
  names.push_back("beta_M");
  names.push_back("AR");
  if (fit.layout.g) names.push_back("DL");
  if (fit.layout.sp) names.push_back("SP");
  if (fit.layout.sp0) names.push_back("SP0");
  if (fit.layout.sp1) names.push_back("SP1");
  if (fit.layout.g && (fit.layout.sp || fit.layout.sp0 || fit.layout.sp1)) {
    names.push_back("TIL");
  }
  return names;
}

double jackknife_acceleration(const std::vector<double>& jackknife_estimates) {
  const size_t J = jackknife_estimates.size();
  if (J < 2) return 0.0;
  double center = mean(jackknife_estimates);
  double s2 = 0.0, s3 = 0.0;
  for (double e : jackknife_estimates) {
    double d = center - e;
    s2 += d * d;
    s3 += d * d * d;
  }
  if (!(s2 > 0.0)) return 0.0;
  return s3 / (6.0 * std::pow(s2, 1.5));
}

BcaInterval bca_interval(double point, const std::vector<double>& draws, double c_hat,
                         double a, std::vector<std::string>* warnings) {
  if (draws.empty()) throw std::invalid_argument("bca_interval: no draws");
  if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("bca_interval: a outside (0,1)");
  const double B = static_cast<double>(draws.size());
  long below = 0;
  for (double d : draws) {
    if (d < point) ++below;
  }

  BcaInterval out;
  out.point = point;
  out.accel = c_hat;

  // Probability for one endpoint given the standard-normal z of its nominal
  // tail. Infinite phi0 degenerates to the matching extreme order statistic.
  auto mapped = [&](double phi0, double z) -> double {
    if (!std::isfinite(phi0)) return phi0 < 0.0 ? 0.0 : 1.0;
    double t = phi0 + z;
    double denom = 1.0 - c_hat * t;
    if (!(denom > 1e-12)) return t > 0.0 ? 1.0 : 0.0;
    double p = normal_cdf(phi0 + t / denom);
    return std::min(1.0, std::max(0.0, p));
  };

  if (below == 0 || below == static_cast<long>(draws.size())) {
    out.phi0 = below == 0 ? -std::numeric_limits<double>::infinity()
                          : std::numeric_limits<double>::infinity();
    out.clamped = true;
    if (warnings) {
      warnings->push_back("all bootstrap draws on one side of the point estimate; "
                          "interval clamped to the extreme order statistics");
    }
  } else {
    out.phi0 = normal_quantile(static_cast<double>(below) / B);
  }

  double p_lo = mapped(out.phi0, normal_quantile(a / 2.0));
  double p_hi = mapped(out.phi0, normal_quantile(1.0 - a / 2.0));
  double p_one = mapped(out.phi0, normal_quantile(a));
  out.lo = quantile_type7(draws, p_lo);
  out.hi = quantile_type7(draws, p_hi);
  out.one_sided_lower = quantile_type7(draws, p_one);
  return out;
}

BootstrapResult wild_bootstrap_bca(const PanelData& panel, const ProductionFit& fit,
                                   const EstimateOptions& options,
                                   const std::vector<std::string>& estimands,
                                   const BootstrapOptions& bopts) {
  if (bopts.B < 2) throw std::invalid_argument("bootstrap: B must be at least 2");
  if (!(bopts.level > 0.5 && bopts.level < 1.0)) {
    throw std::invalid_argument("bootstrap: level outside (0.5, 1)");
  }
  const int N = panel.n_obs();
  const int n_firms = panel.n_firms();
  const double a = 1.0 - bopts.level;

  BootstrapResult result;
  result.names = estimands;
  result.B = bopts.B;
  result.point = evaluate_estimands(estimands, panel, fit, options);
  const Eigen::VectorXd beta_hat = fit.beta();

  std::vector<double> y_log(N);
  for (int i = 0; i < N; ++i) y_log[i] = std::log(panel.Y[i]);

  // Replications: stream identity is the replication id, so results do not
  // depend on scheduling.
  std::vector<Eigen::VectorXd> rows;
  rows.reserve(bopts.B);
  std::vector<double> lnv_b(N), y_b(N), v(n_firms);
  for (int b = 0; b < bopts.B; ++b) {
    RngStream stream(bopts.seed, static_cast<std::uint64_t>(b), 1);
    for (int f = 0; f < n_firms; ++f) v[f] = stream.mammen();
    for (int i = 0; i < N; ++i) {
      double vi = v[panel.firm(i)];
      lnv_b[i] = fit.ln_betaM_theta - vi * fit.eta[i];
      y_b[i] = std::isnan(fit.fitted_y[i])
                   ? y_log[i]
                   : fit.fitted_y[i] + vi * (fit.zeta[i] + fit.eta[i]);
    }
    try {
      ProductionFit fb = estimate_with_data(panel, options, lnv_b, y_b, &beta_hat, 0);
      rows.push_back(evaluate_estimands(estimands, panel, fb, options));
    } catch (const std::exception& e) {
      ++result.n_failed;
      if (result.n_failed <= 5) {
        result.warnings.push_back("replication " + std::to_string(b) + " failed: " +
                                  e.what());
      }
    }
  }
  if (result.n_failed > bopts.max_failure_rate * bopts.B) {
    throw std::runtime_error("bootstrap: " + std::to_string(result.n_failed) + " of " +
                             std::to_string(bopts.B) + " replications failed (limit " +
                             std::to_string(bopts.max_failure_rate * 100.0) + "%)");
  }
  if (rows.size() < 2) throw std::runtime_error("bootstrap: fewer than 2 usable draws");
  result.draws.resize(static_cast<Eigen::Index>(rows.size()), result.point.size());
  for (size_t r = 0; r < rows.size(); ++r) result.draws.row(static_cast<Eigen::Index>(r)) = rows[r];

  // Delete-group jackknife for the acceleration: firms assigned round-robin
  // in sorted-label order; each refit drops one group, warm-started at the
  // point estimate; estimands evaluated at the reduced-sample parameters on
  // the full panel.
  int J = bopts.jackknife_groups > 0
              ? bopts.jackknife_groups
              : std::max(3, static_cast<int>(std::lround(n_firms / 50.0)));
  if (J > n_firms) J = n_firms;
  result.jackknife_groups = J;
  std::vector<Eigen::VectorXd> jack;
  for (int j = 0; j < J; ++j) {
    std::vector<char> drop(n_firms, 0);
    for (int f = j; f < n_firms; f += J) drop[f] = 1;
    try {
      PanelData sub = panel_without_firms(panel, drop);
      std::vector<double> lnv_s(sub.n_obs()), y_s(sub.n_obs());
      for (int i = 0; i < sub.n_obs(); ++i) {
        lnv_s[i] = log_share(sub, i).lnV;
        y_s[i] = std::log(sub.Y[i]);
      }
      ProductionFit fj = estimate_with_data(sub, options, lnv_s, y_s, &beta_hat, 0);
      jack.push_back(evaluate_estimands(estimands, panel, fj, options));
    } catch (const std::exception& e) {
      result.warnings.push_back("jackknife group " + std::to_string(j) + " failed: " +
                                e.what());
    }
  }

  for (Eigen::Index q = 0; q < result.point.size(); ++q) {
    double c_hat = 0.0;
    if (jack.size() >= 3) {
      std::vector<double> ej(jack.size());
      for (size_t j = 0; j < jack.size(); ++j) ej[j] = jack[j][q];
      c_hat = jackknife_acceleration(ej);
    } else {
      result.warnings.push_back("estimand " + estimands[q] +
                                ": fewer than 3 jackknife groups; acceleration set to 0");
    }
    std::vector<double> draws(result.draws.rows());
    for (Eigen::Index r = 0; r < result.draws.rows(); ++r) draws[r] = result.draws(r, q);
    BcaInterval ci = bca_interval(result.point[q], draws, c_hat, a, &result.warnings);
    ci.name = estimands[q];
    result.intervals.push_back(ci);
  }
  return result;
}

}  // namespace prodspill
