// Command-line front end: simulate panels, estimate the production model and
// productivity process, run the alternative two-step estimators, bootstrap
// confidence intervals, and drive Monte Carlo experiments.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "prodspill/alternatives.hpp"
#include "prodspill/dgp.hpp"
#include "prodspill/estimator.hpp"
#include "prodspill/harness.hpp"
#include "prodspill/inference.hpp"
#include "prodspill/panel.hpp"

namespace {

using namespace prodspill;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

// panel.csv -> panel.prices.csv
std::string default_prices_path(const std::string& csv_path) {
  const std::string suffix = ".csv";
  if (csv_path.size() > suffix.size() &&
      csv_path.compare(csv_path.size() - suffix.size(), suffix.size(), suffix) == 0) {
    return csv_path.substr(0, csv_path.size() - suffix.size()) + ".prices.csv";
  }
  return csv_path + ".prices.csv";
}

PanelData load_panel(const std::string& path, const std::string& prices_path, bool relax_g) {
  PanelData panel = load_panel_csv(path, relax_g);
  std::string pp = prices_path.empty() ? default_prices_path(path) : prices_path;
  if (!prices_path.empty() || std::filesystem::exists(pp)) {
    panel.prices = load_prices_csv(pp);
  }
  return panel;
}

std::string csv_cell(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

// Shared estimator-option flags.
struct OptionFlags {
  std::string spec = "cd";
  int degree = 2;
  std::string scheme = "baseline";
  int group_region_prefix = -1;
  int group_industry_prefix = -1;
  int rank_lag = 1;
  std::string fe = "none";
  int fe_region_prefix = -2;  // -2: not set
  int fe_industry_prefix = -2;
  bool time_effects = false;
  bool no_g = false;
  bool no_spatial = false;
  bool drop_renormalized = false;
  std::string use_labor = "auto";
  int multistart = 16;

  void attach(CLI::App* cmd) {
    cmd->add_option("--spec", spec, "Production technology: cd or translog");
    cmd->add_option("--degree", degree, "Total degree of the evolution sieve");
    cmd->add_option("--peer-scheme", scheme,
                    "Peer weights: baseline, size, asymmetric, or fdi_split");
    cmd->add_option("--group-region-prefix", group_region_prefix,
                    "Peer cell region label prefix length (0 full, -1 ignore)");
    cmd->add_option("--group-industry-prefix", group_industry_prefix,
                    "Peer cell industry label prefix length (0 full, -1 ignore)");
    cmd->add_option("--rank-lag", rank_lag,
                    "Ranking lag for asymmetric weights (years back)");
    cmd->add_option("--fe", fe, "Fixed effects: none, group, or group_industry");
    cmd->add_option("--fe-region-prefix", fe_region_prefix,
                    "Fixed-effect region prefix length (overrides --fe)");
    cmd->add_option("--fe-industry-prefix", fe_industry_prefix,
                    "Fixed-effect industry prefix length (overrides --fe)");
    cmd->add_flag("--time-effects", time_effects, "Include year dummies");
    cmd->add_flag("--no-g", no_g, "Drop the lagged G state from the sieve");
    cmd->add_flag("--no-spatial", no_spatial, "Drop spatial-lag states from the sieve");
    cmd->add_flag("--drop-renormalized", drop_renormalized,
                  "Drop rows whose spatial lag skipped undefined peers");
    cmd->add_option("--use-labor", use_labor, "Labor input: auto, true, or false");
    cmd->add_option("--multistart", multistart, "Extra optimizer starts");
  }

  EstimateOptions resolve() const {
    EstimateOptions o;
    if (spec == "cd") {
      o.spec = ProdSpec::cobb_douglas;
    } else if (spec == "translog") {
      o.spec = ProdSpec::translog;
    } else {
      throw CLI::ValidationError("--spec must be cd or translog");
    }
    o.sieve_degree = degree;
    if (scheme == "baseline") {
      o.scheme = PeerScheme::baseline;
    } else if (scheme == "size") {
      o.scheme = PeerScheme::size;
    } else if (scheme == "asymmetric") {
      o.scheme = PeerScheme::asymmetric;
    } else if (scheme == "fdi_split") {
      o.scheme = PeerScheme::fdi_split;
    } else {
      throw CLI::ValidationError("--peer-scheme must be baseline, size, asymmetric, or fdi_split");
    }
    o.grouping.region_prefix = group_region_prefix;
    o.grouping.industry_prefix = group_industry_prefix;
    o.rank_lag = rank_lag;
    if (fe == "group") {
      o.fixed_effects = {true, 0, -1};
    } else if (fe == "group_industry") {
      o.fixed_effects = {true, 0, 0};
    } else if (fe != "none") {
      throw CLI::ValidationError("--fe must be none, group, or group_industry");
    }
    if (fe_region_prefix != -2 || fe_industry_prefix != -2) {
      o.fixed_effects.enabled = true;
      if (fe_region_prefix != -2) o.fixed_effects.region_prefix = fe_region_prefix;
      if (fe_industry_prefix != -2) o.fixed_effects.industry_prefix = fe_industry_prefix;
      if (fe == "none") {
        if (fe_region_prefix == -2) o.fixed_effects.region_prefix = -1;
        if (fe_industry_prefix == -2) o.fixed_effects.industry_prefix = -1;
      }
    }
    o.time_effects = time_effects;
    o.include_g = !no_g;
    o.include_spatial = !no_spatial;
    o.drop_renormalized = drop_renormalized;
    if (use_labor == "true") {
      o.use_labor = true;
    } else if (use_labor == "false") {
      o.use_labor = false;
    } else if (use_labor != "auto") {
      throw CLI::ValidationError("--use-labor must be auto, true, or false");
    }
    o.multistart = multistart;
    return o;
  }
};

void write_effects_csv(const std::string& path, const PanelData& panel,
                       const ProductionFit& fit, const EffectEstimates& eff) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "firm_id,year,omega,eta,zeta,fitted_log_y,AR,DL,SP,SP0,SP1,TIL\n";
  for (int i = 0; i < panel.n_obs(); ++i) {
    out << panel.firm_id[i] << ',' << panel.year[i] << ',' << csv_cell(fit.omega[i]) << ','
        << csv_cell(fit.eta[i]) << ',' << csv_cell(fit.zeta[i]) << ','
        << csv_cell(fit.fitted_y[i]) << ',' << csv_cell(eff.AR[i]) << ','
        << csv_cell(eff.DL[i]) << ',' << csv_cell(eff.SP[i]) << ',' << csv_cell(eff.SP0[i])
        << ',' << csv_cell(eff.SP1[i]) << ',' << csv_cell(eff.TIL[i]) << '\n';
  }
}

int run_simulate(const std::string& config_path, const std::string& out_path,
                 std::optional<int> n_override, std::optional<std::uint64_t> seed_override) {
  DgpConfig config;
  if (!config_path.empty()) config = dgp_config_from_json(read_file(config_path));
  if (n_override) config.n = *n_override;
  if (seed_override) config.seed = *seed_override;
  config.validate();
  SimulatedPanel sim = simulate_panel(config);
  write_panel_csv(sim.panel, out_path);
  std::vector<int> years;
  for (int t = 0; t < config.T; ++t) years.push_back(t);
  write_prices_csv(sim.panel.prices, default_prices_path(out_path), years);
  std::cout << "simulated " << config.n << " firms over " << config.T << " years ("
            << sim.panel.n_obs() << " observations), theta=" << sim.theta << "\n"
            << "panel: " << out_path << "\nprices: " << default_prices_path(out_path)
            << "\n";
  return 0;
}

int run_estimate(const std::string& panel_path, const std::string& prices_path,
                 bool relax_g, const OptionFlags& flags, const std::string& out_path,
                 std::string effects_path) {
  PanelData panel = load_panel(panel_path, prices_path, relax_g);
  EstimateOptions options = flags.resolve();
  EstimationResult res = estimate(panel, options);
  write_file(out_path, fit_to_json(res.fit, options));
  if (effects_path.empty()) {
    effects_path = out_path;
    const std::string suffix = ".json";
    if (effects_path.size() > suffix.size() &&
        effects_path.compare(effects_path.size() - suffix.size(), suffix.size(), suffix) == 0) {
      effects_path = effects_path.substr(0, effects_path.size() - suffix.size());
    }
    effects_path += ".effects.csv";
  }
  write_effects_csv(effects_path, panel, res.fit, res.effects);
  std::cout << "beta_K=" << res.fit.beta_K;
  if (res.fit.spec == ProdSpec::translog) std::cout << " beta_KK=" << res.fit.beta_KK;
  if (res.fit.use_labor) {
    std::cout << " beta_L=" << res.fit.beta_L;
    if (res.fit.spec == ProdSpec::translog) {
      std::cout << " beta_LL=" << res.fit.beta_LL << " beta_KL=" << res.fit.beta_KL;
    }
  }
  std::cout << " beta_M=" << res.fit.beta_M << " theta=" << res.fit.theta
            << " sse=" << res.fit.sse << (res.fit.converged ? "" : " (not converged)")
            << "\nfit: " << out_path << "\neffects: " << effects_path << "\n";
  return 0;
}

int run_alt_compare(const std::string& panel_path, const std::string& prices_path,
                    bool relax_g, const OptionFlags& flags,
                    const std::string& variants_arg, const std::string& out_path) {
  PanelData panel = load_panel(panel_path, prices_path, relax_g);
  EstimateOptions options = flags.resolve();
  AltFirstStep afs = alt_first_step(panel, options);
  PeerWeights weights = build_weights_baseline(panel, options.grouping);

  std::vector<std::string> tokens;
  std::stringstream ss(variants_arg);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) tokens.push_back(tok);
  }
  if (tokens.empty() || (tokens.size() == 1 && tokens[0] == "all")) {
    tokens = {"1", "2"};
    for (AltVariant v : all_alt_variants()) tokens.push_back(alt_variant_name(v));
  }

  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  out << "variant,regressor,coef,se_classical,se_robust,z,n_rows,iv\n";
  auto emit = [&out](const std::string& label, const AltRegression& r) {
    for (Eigen::Index c = 0; c < r.coef.size(); ++c) {
      out << label << ',' << r.names[c] << ',' << csv_cell(r.coef[c]) << ','
          << csv_cell(r.se_classical[c]) << ',' << csv_cell(r.se_robust[c]) << ','
          << csv_cell(r.z[c]) << ',' << r.n_rows << ',' << (r.iv ? 1 : 0) << '\n';
    }
  };
  for (const auto& t : tokens) {
    if (t == "1" || t == "ALT1" || t == "alt1") {
      emit("ALT1", alt_two_step(panel, afs.omega, weights, AltModel::alt1));
      continue;
    }
    if (t == "2" || t == "ALT2" || t == "alt2") {
      emit("ALT2", alt_two_step(panel, afs.omega, weights, AltModel::alt2));
      continue;
    }
    bool found = false;
    for (AltVariant v : all_alt_variants()) {
      if (t == alt_variant_name(v)) {
        emit(t, alt_variant(panel, afs.omega, weights, v));
        found = true;
        break;
      }
    }
    if (!found) throw std::runtime_error("unknown variant token '" + t + "'");
  }
  std::cout << "first-step beta_K=" << afs.fit.beta_K << " beta_M=" << afs.fit.beta_M
            << "\nalt regressions: " << out_path << "\n";
  return 0;
}

int run_bootstrap(const std::string& panel_path, const std::string& prices_path,
                  bool relax_g, const std::string& fit_path, int B, double level,
                  const std::string& estimands_arg, std::uint64_t seed,
                  int jackknife_groups, const std::string& out_path) {
  PanelData panel = load_panel(panel_path, prices_path, relax_g);
  ProductionFit fit;
  EstimateOptions options;
  fit_from_json(read_file(fit_path), &fit, &options);
  if (static_cast<int>(fit.eta.size()) != panel.n_obs()) {
    throw std::runtime_error("fit.json does not match the panel (observation counts differ)");
  }

  std::vector<std::string> estimands;
  if (!estimands_arg.empty()) {
    std::stringstream ss(estimands_arg);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (!tok.empty()) estimands.push_back(tok);
    }
  }
  if (estimands.empty()) estimands = default_estimand_names(fit);

  BootstrapOptions bopts;
  bopts.B = B;
  bopts.level = level;
  bopts.seed = seed;
  bopts.jackknife_groups = jackknife_groups;
  BootstrapResult res = wild_bootstrap_bca(panel, fit, options, estimands, bopts);

  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  out << "estimand,point,lo,hi,one_sided_lower,phi0,accel,clamped,B,failed,jackknife_groups\n";
  for (const auto& ci : res.intervals) {
    out << ci.name << ',' << csv_cell(ci.point) << ',' << csv_cell(ci.lo) << ','
        << csv_cell(ci.hi) << ',' << csv_cell(ci.one_sided_lower) << ','
        << (std::isfinite(ci.phi0) ? csv_cell(ci.phi0) : std::string(ci.phi0 < 0 ? "-inf" : "inf"))
        << ',' << csv_cell(ci.accel) << ',' << (ci.clamped ? 1 : 0) << ',' << res.B << ','
        << res.n_failed << ',' << res.jackknife_groups << '\n';
  }
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "bootstrap: " << res.B - res.n_failed << "/" << res.B
            << " replications succeeded, intervals: " << out_path << "\n";
  return 0;
}

int run_montecarlo(const std::string& spec_path, const std::string& out_path,
                   const std::string& csv_path) {
  ExperimentSpec spec = experiment_from_json(read_file(spec_path));
  ExperimentReport report = run_experiment(spec);
  write_file(out_path, report_to_json(report));
  if (!csv_path.empty()) write_file(csv_path, report_to_csv(report));
  std::cout << "experiment '" << spec.name << "': " << report.rows.size()
            << " metric rows\nreport: " << out_path;
  if (!csv_path.empty()) std::cout << "\ncsv: " << csv_path;
  std::cout << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Production-function and productivity-spillover estimator"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate a panel from the built-in DGP");
  std::string sim_config, sim_out;
  int sim_n = -1;
  std::uint64_t sim_seed = 0;
  bool sim_has_seed = false;
  sim->add_option("--config", sim_config, "DGP configuration JSON (defaults when omitted)");
  sim->add_option("--out", sim_out, "Output panel CSV")->required();
  sim->add_option("--n", sim_n, "Override firm count");
  sim->add_option("--seed", sim_seed, "Override RNG seed")->each([&](const std::string&) {
    sim_has_seed = true;
  });

  // estimate
  auto* est = app.add_subcommand("estimate", "Two-stage estimation on a panel CSV");
  std::string est_panel, est_prices, est_out, est_effects;
  bool est_relax_g = false;
  OptionFlags est_flags;
  est->add_option("--panel", est_panel, "Panel CSV")->required();
  est->add_option("--prices", est_prices, "Price sidecar CSV (auto-detected when omitted)");
  est->add_flag("--relax-g", est_relax_g, "Allow G outside [0,1]");
  est_flags.attach(est);
  est->add_option("--out", est_out, "Output fit JSON")->required();
  est->add_option("--effects", est_effects, "Per-observation effects CSV path");

  // alt-compare
  auto* alt = app.add_subcommand("alt-compare", "Alternative two-step estimators");
  std::string alt_panel, alt_prices, alt_variants = "all", alt_out;
  bool alt_relax_g = false;
  OptionFlags alt_flags;
  alt->add_option("--panel", alt_panel, "Panel CSV")->required();
  alt->add_option("--prices", alt_prices, "Price sidecar CSV (auto-detected when omitted)");
  alt->add_flag("--relax-g", alt_relax_g, "Allow G outside [0,1]");
  alt_flags.attach(alt);
  alt->add_option("--variants", alt_variants, "Comma list: 1,2,I..XI or all");
  alt->add_option("--out", alt_out, "Output CSV")->required();

  // bootstrap
  auto* boot = app.add_subcommand("bootstrap", "Wild bootstrap BCa intervals for a saved fit");
  std::string boot_panel, boot_prices, boot_fit, boot_estimands, boot_out;
  bool boot_relax_g = false;
  int boot_B = 400, boot_jack = 0;
  double boot_level = 0.95;
  std::uint64_t boot_seed = 1;
  boot->add_option("--panel", boot_panel, "Panel CSV the fit was estimated on")->required();
  boot->add_option("--prices", boot_prices, "Price sidecar CSV (auto-detected when omitted)");
  boot->add_flag("--relax-g", boot_relax_g, "Allow G outside [0,1]");
  boot->add_option("--fit", boot_fit, "Fit JSON from the estimate command")->required();
  boot->add_option("--B", boot_B, "Bootstrap replications");
  boot->add_option("--level", boot_level, "Two-sided confidence level");
  boot->add_option("--estimands", boot_estimands,
                   "Comma list (beta_K, beta_M, AR, DL, SP, SP0, SP1, TIL, ...)");
  boot->add_option("--seed", boot_seed, "Bootstrap RNG seed");
  boot->add_option("--jackknife-groups", boot_jack,
                   "Deletion groups for the acceleration (0: auto)");
  boot->add_option("--out", boot_out, "Output intervals CSV")->required();

  // montecarlo
  auto* mc = app.add_subcommand("montecarlo", "Monte Carlo experiment runner");
  std::string mc_spec, mc_out, mc_csv;
  mc->add_option("--spec", mc_spec, "Experiment specification JSON")->required();
  mc->add_option("--out", mc_out, "Report JSON")->required();
  mc->add_option("--csv", mc_csv, "Metric rows CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(sim)) {
      return run_simulate(sim_config, sim_out,
                          sim_n > 0 ? std::optional<int>(sim_n) : std::nullopt,
                          sim_has_seed ? std::optional<std::uint64_t>(sim_seed)
                                       : std::nullopt);
    }
    if (app.got_subcommand(est)) {
      return run_estimate(est_panel, est_prices, est_relax_g, est_flags, est_out,
                          est_effects);
    }
    if (app.got_subcommand(alt)) {
      return run_alt_compare(alt_panel, alt_prices, alt_relax_g, alt_flags, alt_variants,
                             alt_out);
    }
    if (app.got_subcommand(boot)) {
      try {
        return run_bootstrap(boot_panel, boot_prices, boot_relax_g, boot_fit, boot_B,
                             boot_level, boot_estimands, boot_seed, boot_jack, boot_out);
      } catch (const std::invalid_argument&) {
        throw;
      } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
      }
    }
    if (app.got_subcommand(mc)) {
      try {
        return run_montecarlo(mc_spec, mc_out, mc_csv);
      } catch (const std::invalid_argument&) {
        throw;
      } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
