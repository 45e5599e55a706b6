#include "prodspill/harness.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "prodspill/alternatives.hpp"
#include "prodspill/rng.hpp"
#include "prodspill/stats.hpp"

namespace prodspill {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ----- enum <-> string -----

std::string spec_to_string(ProdSpec s) {
  return s == ProdSpec::cobb_douglas ? "cd" : "translog";
}
ProdSpec spec_from_string(const std::string& s) {
  if (s == "cd" || s == "cobb_douglas") return ProdSpec::cobb_douglas;
  if (s == "translog") return ProdSpec::translog;
  throw std::invalid_argument("unknown production spec '" + s + "'");
}

std::string scheme_to_string(PeerScheme s) {
  switch (s) {
    case PeerScheme::baseline: return "baseline";
    case PeerScheme::size: return "size";
    case PeerScheme::asymmetric: return "asymmetric";
    case PeerScheme::fdi_split: return "fdi_split";
  }
  return "baseline";
}
PeerScheme scheme_from_string(const std::string& s) {
  if (s == "baseline") return PeerScheme::baseline;
  if (s == "size") return PeerScheme::size;
  if (s == "asymmetric") return PeerScheme::asymmetric;
  if (s == "fdi_split") return PeerScheme::fdi_split;
  throw std::invalid_argument("unknown peer scheme '" + s + "'");
}

// ----- NaN-tolerant numeric arrays (JSON null <-> NaN) -----

json num_array(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) {
    if (std::isnan(x)) {
      a.push_back(nullptr);
    } else {
      a.push_back(x);
    }
  }
  return a;
}

std::vector<double> num_array_back(const json& a) {
  std::vector<double> v;
  v.reserve(a.size());
  for (const auto& e : a) v.push_back(e.is_null() ? kNaN : e.get<double>());
  return v;
}

json num_array(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd eigen_back(const json& a) {
  Eigen::VectorXd v(a.size());
  Eigen::Index i = 0;
  for (const auto& e : a) v[i++] = e.get<double>();
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

Metrics metrics_scalar(const std::vector<double>& estimates, double truth) {
  if (estimates.empty()) throw std::invalid_argument("metrics: no replications");
  Metrics m;
  double se = 0.0, ae = 0.0;
  for (double e : estimates) {
    m.mean += e;
    se += (e - truth) * (e - truth);
    ae += std::abs(e - truth);
  }
  double n = static_cast<double>(estimates.size());
  m.mean /= n;
  m.rmse = std::sqrt(se / n);
  m.mae = ae / n;
  return m;
}

double rejection_frequency(const std::vector<double>& z_stats, double level) {
  if (z_stats.empty()) throw std::invalid_argument("rejection_frequency: no replications");
  double crit = normal_quantile(1.0 - (1.0 - level) / 2.0);
  long r = 0;
  for (double z : z_stats) {
    if (std::abs(z) > crit) ++r;
  }
  return static_cast<double>(r) / static_cast<double>(z_stats.size());
}

// ---------------------------------------------------------------------------
// Option / fit serialization
// ---------------------------------------------------------------------------

namespace {

json options_to_json_obj(const EstimateOptions& o) {
  json j;
  j["spec"] = spec_to_string(o.spec);
  j["degree"] = o.sieve_degree;
  j["scheme"] = scheme_to_string(o.scheme);
  j["group_region_prefix"] = o.grouping.region_prefix;
  j["group_industry_prefix"] = o.grouping.industry_prefix;
  j["rank_lag"] = o.rank_lag;
  j["fe"] = o.fixed_effects.enabled;
  j["fe_region_prefix"] = o.fixed_effects.region_prefix;
  j["fe_industry_prefix"] = o.fixed_effects.industry_prefix;
  j["time_effects"] = o.time_effects;
  j["include_g"] = o.include_g;
  j["include_spatial"] = o.include_spatial;
  j["drop_renormalized"] = o.drop_renormalized;
  if (o.use_labor.has_value()) {
    j["use_labor"] = *o.use_labor;
  } else {
    j["use_labor"] = "auto";
  }
  j["multistart"] = o.multistart;
  j["multistart_halfwidth"] = o.multistart_halfwidth;
  return j;
}

EstimateOptions options_from_json_obj(const json& j) {
  EstimateOptions o;
  if (j.contains("spec")) o.spec = spec_from_string(j.at("spec"));
  if (j.contains("degree")) o.sieve_degree = j.at("degree");
  if (j.contains("scheme")) o.scheme = scheme_from_string(j.at("scheme"));
  if (j.contains("group_region_prefix")) o.grouping.region_prefix = j.at("group_region_prefix");
  if (j.contains("group_industry_prefix")) {
    o.grouping.industry_prefix = j.at("group_industry_prefix");
  }
  if (j.contains("rank_lag")) o.rank_lag = j.at("rank_lag");
  if (j.contains("fe")) o.fixed_effects.enabled = j.at("fe");
  if (j.contains("fe_region_prefix")) o.fixed_effects.region_prefix = j.at("fe_region_prefix");
  if (j.contains("fe_industry_prefix")) {
    o.fixed_effects.industry_prefix = j.at("fe_industry_prefix");
  }
  if (j.contains("time_effects")) o.time_effects = j.at("time_effects");
  if (j.contains("include_g")) o.include_g = j.at("include_g");
  if (j.contains("include_spatial")) o.include_spatial = j.at("include_spatial");
  if (j.contains("drop_renormalized")) o.drop_renormalized = j.at("drop_renormalized");
  if (j.contains("use_labor") && !j.at("use_labor").is_null()) {
    if (j.at("use_labor").is_boolean()) {
      o.use_labor = j.at("use_labor").get<bool>();
    } else if (j.at("use_labor").get<std::string>() != "auto") {
      throw std::invalid_argument("use_labor must be true, false, or \"auto\"");
    }
  }
  if (j.contains("multistart")) o.multistart = j.at("multistart");
  if (j.contains("multistart_halfwidth")) o.multistart_halfwidth = j.at("multistart_halfwidth");
  return o;
}

void validate_spec(const ExperimentSpec& s) {
  if (s.reps < 1) throw std::invalid_argument("experiment: reps must be >= 1");
  if (s.n_list.empty()) throw std::invalid_argument("experiment: n_list is empty");
  if (s.estimators.empty()) throw std::invalid_argument("experiment: no estimators requested");
  for (const auto& e : s.estimators) {
    if (e != "main" && e != "proxy_exo" && e != "alt1" && e != "alt2" &&
        e != "alt_variants") {
      throw std::invalid_argument("experiment: unknown estimator '" + e + "'");
    }
  }
}

}  // namespace

std::string estimate_options_to_json(const EstimateOptions& options) {
  return options_to_json_obj(options).dump(2);
}

EstimateOptions estimate_options_from_json(const std::string& text) {
  return options_from_json_obj(json::parse(text));
}

std::string fit_to_json(const ProductionFit& fit, const EstimateOptions& options) {
  json j;
  j["options"] = options_to_json_obj(options);
  j["spec"] = spec_to_string(fit.spec);
  j["use_labor"] = fit.use_labor;
  j["theta"] = fit.theta;
  j["ln_betaM_theta"] = fit.ln_betaM_theta;
  j["beta_M"] = fit.beta_M;
  j["beta_MM"] = fit.beta_MM;
  j["beta_KM"] = fit.beta_KM;
  j["beta_LM"] = fit.beta_LM;
  j["beta_K"] = fit.beta_K;
  j["beta_L"] = fit.beta_L;
  j["beta_KK"] = fit.beta_KK;
  j["beta_LL"] = fit.beta_LL;
  j["beta_KL"] = fit.beta_KL;
  j["gamma"] = num_array(fit.gamma);
  j["sieve_degree"] = fit.sieve_degree;
  j["layout"] = {{"g", fit.layout.g},
                 {"sp", fit.layout.sp},
                 {"sp0", fit.layout.sp0},
                 {"sp1", fit.layout.sp1}};
  j["scaling"] = {{"mu", fit.scaling.mu}, {"sd", fit.scaling.sd}};
  j["sse"] = fit.sse;
  j["converged"] = fit.converged;
  j["renormalized_peers"] = fit.renormalized_peers;
  j["fe_labels"] = fit.fe_labels;
  j["fe_coef"] = num_array(fit.fe_coef);
  j["time_labels"] = fit.time_labels;
  j["time_coef"] = num_array(fit.time_coef);
  j["eta"] = num_array(fit.eta);
  j["omega"] = num_array(fit.omega);
  j["zeta"] = num_array(fit.zeta);
  j["fitted_y"] = num_array(fit.fitted_y);
  j["rows"] = fit.rows;
  return j.dump(2);
}

void fit_from_json(const std::string& text, ProductionFit* fit, EstimateOptions* options) {
  json j = json::parse(text);
  if (options) *options = options_from_json_obj(j.at("options"));
  if (!fit) return;
  ProductionFit f;
  f.spec = spec_from_string(j.at("spec"));
  f.use_labor = j.at("use_labor");
  f.theta = j.at("theta");
  f.ln_betaM_theta = j.at("ln_betaM_theta");
  f.beta_M = j.at("beta_M");
  f.beta_MM = j.at("beta_MM");
  f.beta_KM = j.at("beta_KM");
  f.beta_LM = j.at("beta_LM");
  f.beta_K = j.at("beta_K");
  f.beta_L = j.at("beta_L");
  f.beta_KK = j.at("beta_KK");
  f.beta_LL = j.at("beta_LL");
  f.beta_KL = j.at("beta_KL");
  f.gamma = eigen_back(j.at("gamma"));
  f.sieve_degree = j.at("sieve_degree");
  f.layout.g = j.at("layout").at("g");
  f.layout.sp = j.at("layout").at("sp");
  f.layout.sp0 = j.at("layout").at("sp0");
  f.layout.sp1 = j.at("layout").at("sp1");
  f.scaling.mu = j.at("scaling").at("mu").get<std::vector<double>>();
  f.scaling.sd = j.at("scaling").at("sd").get<std::vector<double>>();
  f.sse = j.at("sse");
  f.converged = j.at("converged");
  f.renormalized_peers = j.at("renormalized_peers");
  f.fe_labels = j.at("fe_labels").get<std::vector<std::string>>();
  f.fe_coef = eigen_back(j.at("fe_coef"));
  f.time_labels = j.at("time_labels").get<std::vector<int>>();
  f.time_coef = eigen_back(j.at("time_coef"));
  f.eta = num_array_back(j.at("eta"));
  f.omega = num_array_back(j.at("omega"));
  f.zeta = num_array_back(j.at("zeta"));
  f.fitted_y = num_array_back(j.at("fitted_y"));
  f.rows = j.at("rows").get<std::vector<int>>();
  *fit = f;
}

// ---------------------------------------------------------------------------
// Experiment spec
// ---------------------------------------------------------------------------

ExperimentSpec experiment_from_json(const std::string& text) {
  json j = json::parse(text);
  ExperimentSpec s;
  if (j.contains("name")) s.name = j.at("name");
  json jd = j.contains("dgp") ? j.at("dgp") : json::object();
  // Top-level scenario/g_process are conveniences that override the template.
  if (j.contains("scenario")) jd["scenario"] = j.at("scenario");
  if (j.contains("g_process")) jd["g_process"] = j.at("g_process");
  s.dgp = dgp_config_from_json(jd.dump());
  if (j.contains("n_list")) s.n_list = j.at("n_list").get<std::vector<int>>();
  if (j.contains("reps")) s.reps = j.at("reps");
  if (j.contains("estimators")) s.estimators = j.at("estimators").get<std::vector<std::string>>();
  if (j.contains("estimate")) s.estimate = options_from_json_obj(j.at("estimate"));
  if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("level")) s.level = j.at("level");
  validate_spec(s);
  return s;
}

std::string experiment_to_json(const ExperimentSpec& spec) {
  json j;
  j["name"] = spec.name;
  j["dgp"] = json::parse(dgp_config_to_json(spec.dgp));
  j["n_list"] = spec.n_list;
  j["reps"] = spec.reps;
  j["estimators"] = spec.estimators;
  j["estimate"] = options_to_json_obj(spec.estimate);
  j["seed"] = spec.seed;
  j["level"] = spec.level;
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Experiment runner
// ---------------------------------------------------------------------------

namespace {

// Per-row accumulator over replications. Scalar rows aggregate estimates
// against (possibly per-rep) truths; per-observation rows aggregate per-rep
// within-sample mean/RMSE/MAE.
struct RowAcc {
  bool per_obs = false;
  std::vector<double> est, truth, rmse, mae, z;

  void add_scalar(double e, double t, double zstat = kNaN) {
    est.push_back(e);
    truth.push_back(t);
    if (!std::isnan(zstat)) z.push_back(zstat);
  }

  void add_per_obs(const std::vector<double>& e, const std::vector<double>& t) {
    per_obs = true;
    double se = 0.0, ae = 0.0, me = 0.0, mt = 0.0;
    long n_err = 0, n_e = 0, n_t = 0;
    for (size_t i = 0; i < e.size(); ++i) {
      if (!std::isnan(e[i])) {
        me += e[i];
        ++n_e;
      }
      if (!std::isnan(t[i])) {
        mt += t[i];
        ++n_t;
      }
      if (!std::isnan(e[i]) && !std::isnan(t[i])) {
        double d = e[i] - t[i];
        se += d * d;
        ae += std::abs(d);
        ++n_err;
      }
    }
    if (n_e == 0 || n_err == 0) return;  // nothing defined this replication
    est.push_back(me / static_cast<double>(n_e));
    truth.push_back(n_t > 0 ? mt / static_cast<double>(n_t) : kNaN);
    rmse.push_back(std::sqrt(se / static_cast<double>(n_err)));
    mae.push_back(ae / static_cast<double>(n_err));
  }

  MetricRow finalize(const std::string& estimator, const std::string& estimand, int n,
                     double level) const {
    MetricRow row;
    row.estimator = estimator;
    row.estimand = estimand;
    row.n = n;
    row.reps_used = static_cast<int>(est.size());
    if (est.empty()) {
      row.truth = row.mean = row.rmse = row.mae = row.rejection = kNaN;
      return row;
    }
    if (per_obs) {
      row.mean = mean(est);
      row.truth = mean(truth);
      row.rmse = mean(rmse);
      row.mae = mean(mae);
    } else {
      double se = 0.0, ae = 0.0, m = 0.0, t = 0.0;
      for (size_t i = 0; i < est.size(); ++i) {
        m += est[i];
        t += truth[i];
        se += (est[i] - truth[i]) * (est[i] - truth[i]);
        ae += std::abs(est[i] - truth[i]);
      }
      double n_reps = static_cast<double>(est.size());
      row.mean = m / n_reps;
      row.truth = t / n_reps;
      row.rmse = std::sqrt(se / n_reps);
      row.mae = ae / n_reps;
    }
    row.rejection = z.empty() ? kNaN : rejection_frequency(z, level);
    return row;
  }
};

// Keyed accumulator preserving insertion order for stable report rows.
struct RowTable {
  std::vector<std::pair<std::string, RowAcc>> rows;
  std::map<std::string, size_t> index;

  RowAcc& at(const std::string& estimator, const std::string& estimand) {
    std::string key = estimator + "\x1f" + estimand;
    auto it = index.find(key);
    if (it == index.end()) {
      index[key] = rows.size();
      rows.emplace_back(key, RowAcc{});
      return rows.back().second;
    }
    return rows[it->second].second;
  }
};

}  // namespace

ExperimentReport run_experiment(const ExperimentSpec& spec) {
  validate_spec(spec);
  ExperimentReport report;
  report.spec = spec;

  bool want_main = false, want_proxy = false, want_alt1 = false, want_alt2 = false,
       want_variants = false;
  for (const auto& e : spec.estimators) {
    want_main = want_main || e == "main";
    want_proxy = want_proxy || e == "proxy_exo";
    want_alt1 = want_alt1 || e == "alt1";
    want_alt2 = want_alt2 || e == "alt2";
    want_variants = want_variants || e == "alt_variants";
  }
  bool want_first_step = want_proxy || want_alt1 || want_alt2 || want_variants;

  for (int n : spec.n_list) {
    RowTable table;
    std::map<std::string, int> fails;

    for (int rep = 0; rep < spec.reps; ++rep) {
      DgpConfig cfg = spec.dgp;
      cfg.n = n;
      cfg.seed = mix64(spec.seed ^ mix64((static_cast<std::uint64_t>(n) << 24) +
                                         static_cast<std::uint64_t>(rep) + 1));
      SimulatedPanel sim = simulate_panel(cfg);

      if (want_main) {
        try {
          EstimationResult res = estimate(sim.panel, spec.estimate);
          table.at("main", "beta_K").add_scalar(res.fit.beta_K, cfg.beta_K);
          table.at("main", "beta_M").add_scalar(res.fit.beta_M, cfg.beta_M);
          table.at("main", "theta").add_scalar(res.fit.theta, sim.theta);
          table.at("main", "AR").add_per_obs(res.effects.AR, sim.truth.AR);
          if (res.fit.layout.g) table.at("main", "DL").add_per_obs(res.effects.DL, sim.truth.DL);
          if (res.fit.layout.sp) table.at("main", "SP").add_per_obs(res.effects.SP, sim.truth.SP);
          if (res.fit.layout.sp0) {
            table.at("main", "SP0").add_per_obs(res.effects.SP0, sim.truth.SP);
          }
          if (res.fit.layout.sp1) {
            table.at("main", "SP1").add_per_obs(res.effects.SP1, sim.truth.SP);
          }
          if (res.fit.layout.g &&
              (res.fit.layout.sp || res.fit.layout.sp0 || res.fit.layout.sp1)) {
            table.at("main", "TIL").add_per_obs(res.effects.TIL, sim.truth.TIL);
          }
        } catch (const std::exception&) {
          ++fails["main"];
        }
      }

      if (want_first_step) {
        AltFirstStep afs;
        PeerWeights weights;
        bool ok = true;
        try {
          afs = alt_first_step(sim.panel, spec.estimate);
          weights = build_weights_baseline(sim.panel, spec.estimate.grouping);
        } catch (const std::exception&) {
          ok = false;
          if (want_proxy) ++fails["proxy_exo"];
          if (want_alt1) ++fails["alt1"];
          if (want_alt2) ++fails["alt2"];
          if (want_variants) ++fails["alt_variants"];
        }
        if (ok) {
          if (want_proxy) {
            table.at("proxy_exo", "beta_K").add_scalar(afs.fit.beta_K, cfg.beta_K);
            table.at("proxy_exo", "beta_M").add_scalar(afs.fit.beta_M, cfg.beta_M);
          }
          if (want_alt1) {
            try {
              AltRegression r = alt_two_step(sim.panel, afs.omega, weights, AltModel::alt1);
              table.at("alt1", "alpha11").add_scalar(r.coef[0], 0.0, r.z[0]);
              table.at("alt1", "alpha12").add_scalar(r.coef[1], 0.0, r.z[1]);
              table.at("alt1", "alpha13").add_scalar(r.coef[2], 0.0, r.z[2]);
            } catch (const std::exception&) {
              ++fails["alt1"];
            }
          }
          if (want_alt2) {
            try {
              AltRegression r = alt_two_step(sim.panel, afs.omega, weights, AltModel::alt2);
              table.at("alt2", "alpha21").add_scalar(r.coef[0], 0.0, r.z[0]);
              table.at("alt2", "alpha22").add_scalar(r.coef[1], 0.0, r.z[1]);
              table.at("alt2", "alpha23").add_scalar(r.coef[2], 0.0, r.z[2]);
            } catch (const std::exception&) {
              ++fails["alt2"];
            }
          }
          if (want_variants) {
            try {
              for (AltVariant v : all_alt_variants()) {
                AltRegression r = alt_variant(sim.panel, afs.omega, weights, v);
                std::string base = std::string("variant_") + alt_variant_name(v);
                table.at("alt_variants", base + "_spill")
                    .add_scalar(r.coef[r.spill_index], 0.0, r.z[r.spill_index]);
                if (r.coef.size() > 2) {
                  table.at("alt_variants", base + "_own_g")
                      .add_scalar(r.coef[2], 0.0, r.z[2]);
                }
              }
            } catch (const std::exception&) {
              ++fails["alt_variants"];
            }
          }
        }
      }
    }

    for (const auto& [name, count] : fails) {
      report.failures[name + "@" + std::to_string(n)] = count;
      if (count > 0.05 * spec.reps) {
        throw std::runtime_error("experiment: estimator " + name + " failed " +
                                 std::to_string(count) + " of " + std::to_string(spec.reps) +
                                 " replications at n=" + std::to_string(n));
      }
    }
    for (const auto& [key, acc] : table.rows) {
      size_t sep = key.find('\x1f');
      report.rows.push_back(
          acc.finalize(key.substr(0, sep), key.substr(sep + 1), n, spec.level));
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

std::string report_to_json(const ExperimentReport& report) {
  json j;
  j["spec"] = json::parse(experiment_to_json(report.spec));
  j["failures"] = report.failures;
  json rows = json::array();
  for (const auto& r : report.rows) {
    json row;
    row["estimator"] = r.estimator;
    row["estimand"] = r.estimand;
    row["n"] = r.n;
    row["truth"] = std::isnan(r.truth) ? json(nullptr) : json(r.truth);
    row["mean"] = std::isnan(r.mean) ? json(nullptr) : json(r.mean);
    row["rmse"] = std::isnan(r.rmse) ? json(nullptr) : json(r.rmse);
    row["mae"] = std::isnan(r.mae) ? json(nullptr) : json(r.mae);
    row["rejection"] = std::isnan(r.rejection) ? json(nullptr) : json(r.rejection);
    row["reps_used"] = r.reps_used;
    rows.push_back(row);
  }
  j["rows"] = rows;
  return j.dump(2);
}

std::string report_to_csv(const ExperimentReport& report) {
  std::ostringstream out;
  out << "estimator,estimand,n,truth,mean,rmse,mae,rejection,reps_used\n";
  auto cell = [](double v) {
    if (std::isnan(v)) return std::string();
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return std::string(buf);
  };
  for (const auto& r : report.rows) {
    out << r.estimator << ',' << r.estimand << ',' << r.n << ',' << cell(r.truth) << ','
        << cell(r.mean) << ',' << cell(r.rmse) << ',' << cell(r.mae) << ','
        << cell(r.rejection) << ',' << r.reps_used << '\n';
  }
  return out.str();
}

}  // namespace prodspill
