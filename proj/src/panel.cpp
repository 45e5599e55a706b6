#include "prodspill/panel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace prodspill {

double PriceSeries::p_y(int year) const {
  auto it = by_year.find(year);
  return it == by_year.end() ? 1.0 : it->second.first;
}

double PriceSeries::p_m(int year) const {
  auto it = by_year.find(year);
  return it == by_year.end() ? 1.0 : it->second.second;
}

void PriceSeries::set(int year, double p_y, double p_m) {
  if (!(p_y > 0.0) || !(p_m > 0.0)) {
    throw std::invalid_argument("PriceSeries: prices must be strictly positive, year " +
                                std::to_string(year));
  }
  by_year[year] = {p_y, p_m};
}

int PanelData::obs_at(int firm, int year) const {
  auto it = index_.find({firm, year});
  return it == index_.end() ? -1 : it->second;
}

void PanelData::finalize(bool relax_g) {
  const int n = n_obs();
  auto expect = [&](size_t got, const char* field) {
    if (static_cast<int>(got) != n) {
      throw std::invalid_argument(std::string("PanelData: column length mismatch in ") + field);
    }
  };
  expect(firm_id.size(), "firm_id");
  expect(Y.size(), "Y");
  expect(K.size(), "K");
  expect(L.size(), "L");
  expect(M.size(), "M");
  expect(G.size(), "G");
  expect(region.size(), "region");
  expect(industry.size(), "industry");
  if (omega_true.empty()) {
    omega_true.assign(n, std::numeric_limits<double>::quiet_NaN());
  }
  expect(omega_true.size(), "omega_true");

  // Sort by (firm_id, year).
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (firm_id[a] != firm_id[b]) return firm_id[a] < firm_id[b];
    return year[a] < year[b];
  });
  auto permute_d = [&](std::vector<double>& v) {
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = v[order[i]];
    v.swap(out);
  };
  auto permute_s = [&](std::vector<std::string>& v) {
    std::vector<std::string> out(n);
    for (int i = 0; i < n; ++i) out[i] = std::move(v[order[i]]);
    v.swap(out);
  };
  {
    std::vector<int> out(n);
    for (int i = 0; i < n; ++i) out[i] = year[order[i]];
    year.swap(out);
  }
  permute_s(firm_id);
  permute_d(Y);
  permute_d(K);
  permute_d(L);
  permute_d(M);
  permute_d(G);
  permute_s(region);
  permute_s(industry);
  permute_d(omega_true);

  // Firm indices over sorted labels, duplicate keys, validity.
  firm_labels_.clear();
  firm_.assign(n, -1);
  index_.clear();
  for (int i = 0; i < n; ++i) {
    if (i == 0 || firm_id[i] != firm_id[i - 1]) {
      firm_labels_.push_back(firm_id[i]);
    } else if (year[i] == year[i - 1]) {
      throw std::invalid_argument("PanelData: duplicate (firm_id, year) key: " + firm_id[i] +
                                  ", " + std::to_string(year[i]));
    }
    firm_[i] = static_cast<int>(firm_labels_.size()) - 1;
    index_[{firm_[i], year[i]}] = i;

    auto check_pos = [&](double v, const char* field) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw std::invalid_argument("PanelData: " + std::string(field) +
                                    " must be strictly positive and finite at firm " +
                                    firm_id[i] + ", year " + std::to_string(year[i]));
      }
    };
    check_pos(Y[i], "Y");
    check_pos(K[i], "K");
    check_pos(L[i], "L");
    check_pos(M[i], "M");
    if (std::isfinite(G[i])) {
      if (!relax_g && (G[i] < 0.0 || G[i] > 1.0)) {
        throw std::invalid_argument("PanelData: G outside [0,1] at firm " + firm_id[i] +
                                    ", year " + std::to_string(year[i]) +
                                    " (pass relax_g to allow)");
      }
    } else if (!std::isnan(G[i])) {
      throw std::invalid_argument("PanelData: G must be finite at firm " + firm_id[i]);
    }
  }

  has_omega_true = false;
  for (int i = 0; i < n; ++i) {
    if (!std::isnan(omega_true[i])) {
      has_omega_true = true;
      break;
    }
  }

  lag_.assign(n, -1);
  for (int i = 0; i < n; ++i) {
    auto it = index_.find({firm_[i], year[i] - 1});
    if (it != index_.end()) lag_[i] = it->second;
  }
}

std::vector<LagPair> lag_align(const PanelData& panel) {
  std::vector<LagPair> pairs;
  for (int i = 0; i < panel.n_obs(); ++i) {
    int l = panel.lag(i);
    if (l >= 0) pairs.push_back({i, l});
  }
  return pairs;
}

ShareValue log_share(const PanelData& panel, int i) {
  double py = panel.prices.p_y(panel.year[i]);
  double pm = panel.prices.p_m(panel.year[i]);
  double v = pm * panel.M[i] / (py * panel.Y[i]);
  return {v, std::log(v)};
}

// ---------------------------------------------------------------------------
// CSV input/output
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_double(const std::string& s, int line_no, const char* field) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("CSV line " + std::to_string(line_no) + ": cannot parse " +
                                field + " value '" + s + "'");
  }
}

int parse_int(const std::string& s, int line_no, const char* field) {
  try {
    size_t pos = 0;
    int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("CSV line " + std::to_string(line_no) + ": cannot parse " +
                                field + " value '" + s + "'");
  }
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

PanelData load_panel_csv(const std::string& path, bool relax_g) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open panel CSV: " + path);

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty panel CSV: " + path);
  auto header = split_csv_line(line);
  const std::vector<std::string> required = {"firm_id", "year", "Y",      "K",
                                             "L",       "M",    "G",      "region",
                                             "industry"};
  if (header.size() < required.size()) {
    throw std::runtime_error("panel CSV header is missing columns in " + path);
  }
  for (size_t c = 0; c < required.size(); ++c) {
    if (header[c] != required[c]) {
      throw std::runtime_error("panel CSV column " + std::to_string(c + 1) + " must be '" +
                               required[c] + "', got '" + header[c] + "' in " + path);
    }
  }
  bool with_omega = header.size() > required.size() && header[required.size()] == "omega_true";
  size_t n_cols = required.size() + (with_omega ? 1 : 0);
  if (header.size() != n_cols) {
    throw std::runtime_error("panel CSV has unexpected extra columns in " + path);
  }

  PanelData panel;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto f = split_csv_line(line);
    if (f.size() != n_cols) {
      throw std::runtime_error("CSV line " + std::to_string(line_no) + ": expected " +
                               std::to_string(n_cols) + " fields, got " +
                               std::to_string(f.size()));
    }
    if (f[0].empty()) {
      throw std::runtime_error("CSV line " + std::to_string(line_no) + ": empty firm_id");
    }
    panel.firm_id.push_back(f[0]);
    panel.year.push_back(parse_int(f[1], line_no, "year"));
    panel.Y.push_back(parse_double(f[2], line_no, "Y"));
    panel.K.push_back(parse_double(f[3], line_no, "K"));
    panel.L.push_back(parse_double(f[4], line_no, "L"));
    panel.M.push_back(parse_double(f[5], line_no, "M"));
    panel.G.push_back(f[6].empty() ? std::numeric_limits<double>::quiet_NaN()
                                   : parse_double(f[6], line_no, "G"));
    panel.region.push_back(f[7]);
    panel.industry.push_back(f[8]);
    if (with_omega) {
      panel.omega_true.push_back(f[9].empty() ? std::numeric_limits<double>::quiet_NaN()
                                              : parse_double(f[9], line_no, "omega_true"));
    }
  }
  panel.finalize(relax_g);
  return panel;
}

void write_panel_csv(const PanelData& panel, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write panel CSV: " + path);
  out << "firm_id,year,Y,K,L,M,G,region,industry";
  if (panel.has_omega_true) out << ",omega_true";
  out << "\n";
  for (int i = 0; i < panel.n_obs(); ++i) {
    out << panel.firm_id[i] << ',' << panel.year[i] << ',' << format_double(panel.Y[i]) << ','
        << format_double(panel.K[i]) << ',' << format_double(panel.L[i]) << ','
        << format_double(panel.M[i]) << ','
        << (std::isnan(panel.G[i]) ? std::string() : format_double(panel.G[i])) << ','
        << panel.region[i] << ',' << panel.industry[i];
    if (panel.has_omega_true) {
      out << ',' << (std::isnan(panel.omega_true[i]) ? std::string()
                                                     : format_double(panel.omega_true[i]));
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed for panel CSV: " + path);
}

PriceSeries load_prices_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open prices CSV: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty prices CSV: " + path);
  auto header = split_csv_line(line);
  if (header.size() != 3 || header[0] != "year" || header[1] != "P_Y" || header[2] != "P_M") {
    throw std::runtime_error("prices CSV header must be year,P_Y,P_M in " + path);
  }
  PriceSeries prices;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto f = split_csv_line(line);
    if (f.size() != 3) {
      throw std::runtime_error("prices CSV line " + std::to_string(line_no) +
                               ": expected 3 fields");
    }
    int year = parse_int(f[0], line_no, "year");
    if (prices.by_year.count(year)) {
      throw std::runtime_error("prices CSV line " + std::to_string(line_no) +
                               ": duplicate year " + std::to_string(year));
    }
    prices.set(year, parse_double(f[1], line_no, "P_Y"), parse_double(f[2], line_no, "P_M"));
  }
  return prices;
}

void write_prices_csv(const PriceSeries& prices, const std::string& path,
                      const std::vector<int>& years) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write prices CSV: " + path);
  out << "year,P_Y,P_M\n";
  for (int year : years) {
    out << year << ',' << format_double(prices.p_y(year)) << ','
        << format_double(prices.p_m(year)) << "\n";
  }
  if (!out) throw std::runtime_error("write failed for prices CSV: " + path);
}

}  // namespace prodspill
