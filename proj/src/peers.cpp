#include "prodspill/peers.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

namespace prodspill {

namespace {

std::string take_prefix(const std::string& label, int prefix) {
  if (prefix < 0) return std::string();
  if (prefix == 0 || prefix >= static_cast<int>(label.size())) return label;
  return label.substr(0, static_cast<size_t>(prefix));
}

// Observation indices per (year, group key) cell.
std::unordered_map<std::string, std::vector<int>> group_cells(const PanelData& panel,
                                                              const PeerGrouping& grouping) {
  std::unordered_map<std::string, std::vector<int>> cells;
  for (int i = 0; i < panel.n_obs(); ++i) {
    cells[std::to_string(panel.year[i]) + '\x1f' + grouping.key(panel, i)].push_back(i);
  }
  return cells;
}

}  // namespace

std::string PeerGrouping::key(const PanelData& panel, int i) const {
  return take_prefix(panel.region[i], region_prefix) + '\x1f' +
         take_prefix(panel.industry[i], industry_prefix);
}

PeerWeights build_weights_baseline(const PanelData& panel, const PeerGrouping& grouping) {
  PeerWeights w;
  w.rows.resize(panel.n_obs());
  for (const auto& [cell, members] : group_cells(panel, grouping)) {
    (void)cell;
    const int m = static_cast<int>(members.size());
    if (m < 2) continue;
    const double share = 1.0 / static_cast<double>(m - 1);
    for (int i : members) {
      auto& row = w.rows[i];
      row.reserve(m - 1);
      for (int j : members) {
        if (j != i) row.push_back({j, share});
      }
    }
  }
  return w;
}

PeerWeights build_weights_size(const PanelData& panel, const PeerGrouping& grouping) {
  PeerWeights w;
  w.rows.resize(panel.n_obs());
  for (const auto& [cell, members] : group_cells(panel, grouping)) {
    (void)cell;
    const int m = static_cast<int>(members.size());
    if (m < 2) continue;
    for (int i : members) {
      double total = 0.0;
      for (int j : members) {
        if (j != i) total += panel.L[j];
      }
      if (!(total > 0.0)) {
        throw std::runtime_error("build_weights_size: zero total peer labor for firm " +
                                 panel.firm_id[i] + ", year " + std::to_string(panel.year[i]));
      }
      auto& row = w.rows[i];
      row.reserve(m - 1);
      for (int j : members) {
        if (j != i) row.push_back({j, panel.L[j] / total});
      }
    }
  }
  return w;
}

PeerWeights build_weights_asymmetric(const PanelData& panel, const PeerGrouping& grouping,
                                     const std::vector<double>& productivity, int rank_lag) {
  if (static_cast<int>(productivity.size()) != panel.n_obs()) {
    throw std::invalid_argument("build_weights_asymmetric: productivity length mismatch");
  }
  if (rank_lag < 1) {
    throw std::invalid_argument("build_weights_asymmetric: rank_lag must be >= 1");
  }
  // Ranking value of observation i taken rank_lag years earlier; NaN if absent.
  auto ranked = [&](int i) {
    int prev = panel.obs_at(panel.firm(i), panel.year[i] - rank_lag);
    return prev < 0 ? std::numeric_limits<double>::quiet_NaN() : productivity[prev];
  };
  PeerWeights w;
  w.rows.resize(panel.n_obs());
  for (const auto& [cell, members] : group_cells(panel, grouping)) {
    (void)cell;
    if (members.size() < 2) continue;
    for (int i : members) {
      double own = ranked(i);
      if (std::isnan(own)) continue;
      auto& row = w.rows[i];
      for (int j : members) {
        if (j != i && ranked(j) > own) row.push_back({j, 0.0});
      }
      if (row.empty()) continue;
      const double share = 1.0 / static_cast<double>(row.size());
      for (auto& e : row) e.w = share;
    }
  }
  return w;
}

BidimensionalWeights build_weights_fdi_split(const PanelData& panel,
                                             const PeerGrouping& grouping) {
  BidimensionalWeights bw;
  bw.side0.rows.resize(panel.n_obs());
  bw.side1.rows.resize(panel.n_obs());
  for (int i = 0; i < panel.n_obs(); ++i) {
    if (std::isnan(panel.G[i])) {
      throw std::runtime_error("build_weights_fdi_split: G missing for firm " +
                               panel.firm_id[i] + ", year " + std::to_string(panel.year[i]));
    }
  }
  for (const auto& [cell, members] : group_cells(panel, grouping)) {
    (void)cell;
    std::vector<int> zero, positive;
    for (int j : members) (panel.G[j] > 0.0 ? positive : zero).push_back(j);
    for (int i : members) {
      auto fill = [&](const std::vector<int>& side, PeerWeights& out) {
        int count = 0;
        for (int j : side) count += (j != i);
        if (count == 0) return;
        auto& row = out.rows[i];
        row.reserve(count);
        const double share = 1.0 / static_cast<double>(count);
        for (int j : side) {
          if (j != i) row.push_back({j, share});
        }
      };
      fill(zero, bw.side0);
      fill(positive, bw.side1);
    }
  }
  return bw;
}

double spatial_lag(const PanelData& panel, const PeerWeights& weights,
                   const std::vector<double>& values, int i) {
  const auto& row = weights.rows[i];
  if (row.empty()) return std::numeric_limits<double>::quiet_NaN();
  double acc = 0.0;
  for (const auto& e : row) {
    if (std::isnan(values[e.obs])) {
      throw std::runtime_error("spatial_lag: value missing for peer firm " +
                               panel.firm_id[e.obs] + ", year " +
                               std::to_string(panel.year[e.obs]));
    }
    acc += e.w * values[e.obs];
  }
  return acc;
}

double spatial_lag_renormalized(const PeerWeights& weights, const std::vector<double>& values,
                                int i, long* n_skipped) {
  const auto& row = weights.rows[i];
  double acc = 0.0;
  double wsum = 0.0;
  for (const auto& e : row) {
    if (std::isnan(values[e.obs])) {
      if (n_skipped) ++*n_skipped;
      continue;
    }
    acc += e.w * values[e.obs];
    wsum += e.w;
  }
  if (wsum <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return acc / wsum;
}

}  // namespace prodspill
