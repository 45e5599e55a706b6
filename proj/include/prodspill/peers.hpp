#pragma once

// Peer-identifying weight matrices s_ijt: baseline (uniform), size-weighted,
// asymmetric (only more-productive peers under lagged ranking), and the
// FDI-split pair of weight sets, plus spatial lags of per-observation series.

#include <string>
#include <vector>

#include "prodspill/panel.hpp"

namespace prodspill {

// Peer groups are intersections of region and industry label prefixes within
// a year. Prefix length: -1 ignores the dimension, 0 uses the full label,
// n > 0 uses the first n characters.
struct PeerGrouping {
  int region_prefix = -1;
  int industry_prefix = -1;

  std::string key(const PanelData& panel, int i) const;
};

struct PeerEntry {
  int obs;   // peer observation index (same year)
  double w;  // weight, row sums to 1 when non-empty
};

// One sparse weight row per observation; an empty row flags an empty peer set.
struct PeerWeights {
  std::vector<std::vector<PeerEntry>> rows;

  int n_obs() const { return static_cast<int>(rows.size()); }
  bool empty_row(int i) const { return rows[i].empty(); }
};

// Separate weight sets over peers without and with a positive productivity
// modifier; row supports are disjoint by construction.
struct BidimensionalWeights {
  PeerWeights side0;  // peers with G <= 0
  PeerWeights side1;  // peers with G > 0
};

// Uniform weights over same-group same-year peers, self excluded.
PeerWeights build_weights_baseline(const PanelData& panel, const PeerGrouping& grouping);

// Weights proportional to peer labor within the group-year cell.
PeerWeights build_weights_size(const PanelData& panel, const PeerGrouping& grouping);

// Uniform weights over group peers strictly more productive than the firm,
// ranked by the series value rank_lag years earlier. Rows with no ranking
// observation for the firm itself are empty.
PeerWeights build_weights_asymmetric(const PanelData& panel, const PeerGrouping& grouping,
                                     const std::vector<double>& productivity,
                                     int rank_lag = 1);

// Baseline construction applied separately within the G <= 0 and G > 0
// subsets of each group-year cell.
BidimensionalWeights build_weights_fdi_split(const PanelData& panel,
                                             const PeerGrouping& grouping);

// Weighted sum of values over the row of observation i. NaN when the row is
// empty; a NaN peer value is an error naming the peer.
double spatial_lag(const PanelData& panel, const PeerWeights& weights,
                   const std::vector<double>& values, int i);

// As spatial_lag, but NaN peer values are skipped and the remaining weights
// renormalized; n_skipped (if given) accumulates the number of skipped peers.
// NaN when no peer has a value.
double spatial_lag_renormalized(const PeerWeights& weights, const std::vector<double>& values,
                                int i, long* n_skipped = nullptr);

}  // namespace prodspill
