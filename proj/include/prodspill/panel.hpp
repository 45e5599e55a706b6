#pragma once

// Panel data model: observations keyed by (firm, year), output/materials
// prices, CSV input/output, and within-firm lag alignment for unbalanced
// panels.

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace prodspill {

// Price indices by year. Years without an entry default to 1.0 for both
// series, so share construction works on panels without price data.
struct PriceSeries {
  std::map<int, std::pair<double, double>> by_year;  // year -> (P_Y, P_M)

  bool empty() const { return by_year.empty(); }
  double p_y(int year) const;
  double p_m(int year) const;
  void set(int year, double p_y, double p_m);
};

// Column-oriented panel. After finalize() the rows are sorted by
// (firm_id, year), firm indices are contiguous in sorted-label order, and
// lag(i) resolves the same firm's observation in the immediately preceding
// year (-1 on gaps). Immutable once finalized.
struct PanelData {
  std::vector<std::string> firm_id;
  std::vector<int> year;
  std::vector<double> Y, K, L, M, G;
  std::vector<std::string> region, industry;
  std::vector<double> omega_true;  // NaN when not provided
  bool has_omega_true = false;
  PriceSeries prices;

  int n_obs() const { return static_cast<int>(year.size()); }
  int n_firms() const { return static_cast<int>(firm_labels_.size()); }
  const std::vector<std::string>& firm_labels() const { return firm_labels_; }

  // Contiguous firm index of observation i (firms ordered by sorted label).
  int firm(int i) const { return firm_[i]; }
  // Observation of the same firm at year-1, or -1.
  int lag(int i) const { return lag_[i]; }
  // Observation index for (firm index, year), or -1.
  int obs_at(int firm, int year) const;

  // Sorts rows, assigns firm indices, builds the lag map, and validates
  // positivity, G bounds (unless relax_g), and key uniqueness.
  void finalize(bool relax_g = false);

 private:
  std::vector<std::string> firm_labels_;
  std::vector<int> firm_;
  std::vector<int> lag_;
  std::map<std::pair<int, int>, int> index_;
};

// One row per observation with an immediately preceding same-firm record.
struct LagPair {
  int current;  // observation index
  int lagged;   // observation index at year-1
};

std::vector<LagPair> lag_align(const PanelData& panel);

// Revenue share of materials and its log for observation i.
struct ShareValue {
  double V;
  double lnV;
};

ShareValue log_share(const PanelData& panel, int i);

// CSV schema: firm_id,year,Y,K,L,M,G,region,industry[,omega_true].
PanelData load_panel_csv(const std::string& path, bool relax_g = false);
void write_panel_csv(const PanelData& panel, const std::string& path);

// Price sidecar schema: year,P_Y,P_M.
PriceSeries load_prices_csv(const std::string& path);
void write_prices_csv(const PriceSeries& prices, const std::string& path,
                      const std::vector<int>& years);

}  // namespace prodspill
