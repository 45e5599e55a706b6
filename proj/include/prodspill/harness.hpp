#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "prodspill/dgp.hpp"
#include "prodspill/estimator.hpp"

namespace prodspill {

// Cross-replication summary of a scalar estimand against a constant truth.
struct Metrics {
  double mean = 0.0;
  double rmse = 0.0;
  double mae = 0.0;
};

Metrics metrics_scalar(const std::vector<double>& estimates, double truth);

// Fraction of replications rejecting a zero null in a two-sided z-test at
// the given confidence level.
double rejection_frequency(const std::vector<double>& z_stats, double level);

// Monte Carlo experiment: a DGP template swept over panel sizes, each
// replication estimated by the requested estimators.
struct ExperimentSpec {
  std::string name;
  DgpConfig dgp;  // template; n is overridden per entry of n_list
  std::vector<int> n_list{100};
  int reps = 200;
  std::vector<std::string> estimators{"main"};  // main, proxy_exo, alt1, alt2, alt_variants
  EstimateOptions estimate;
  std::uint64_t seed = 1;
  double level = 0.95;  // z-test level for rejection frequencies
};

struct MetricRow {
  std::string estimator;
  std::string estimand;
  int n = 0;
  double truth = 0.0;  // constant, or the across-rep mean of per-rep truth
  double mean = 0.0;
  double rmse = 0.0;
  double mae = 0.0;
  double rejection = 0.0;  // NaN when no z-statistic applies
  int reps_used = 0;
};

struct ExperimentReport {
  ExperimentSpec spec;
  std::vector<MetricRow> rows;
  std::map<std::string, int> failures;  // "estimator@n" -> failed replications
};

ExperimentSpec experiment_from_json(const std::string& text);
std::string experiment_to_json(const ExperimentSpec& spec);

// Runs the experiment; deterministic under the master seed (per-replication
// RNG streams are derived from (seed, n, rep), never from scheduling).
// Throws when any estimator's failure rate at some n exceeds 5%.
ExperimentReport run_experiment(const ExperimentSpec& spec);

std::string report_to_json(const ExperimentReport& report);
std::string report_to_csv(const ExperimentReport& report);

// Estimator option and fit serialization shared with the CLI.
std::string estimate_options_to_json(const EstimateOptions& options);
EstimateOptions estimate_options_from_json(const std::string& text);
std::string fit_to_json(const ProductionFit& fit, const EstimateOptions& options);
void fit_from_json(const std::string& text, ProductionFit* fit, EstimateOptions* options);

}  // namespace prodspill
