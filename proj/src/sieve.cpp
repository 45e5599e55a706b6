#include "prodspill/sieve.hpp"

#include <cmath>
#include <stdexcept>

namespace prodspill {

void ZScaling::apply(const double* z, double* u) const {
  for (int v = 0; v < n_vars(); ++v) u[v] = (z[v] - mu[v]) / sd[v];
}

ZScaling fit_scaling(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) {
    throw std::invalid_argument("fit_scaling: no rows");
  }
  int d = static_cast<int>(rows.front().size());
  ZScaling s;
  s.mu.assign(d, 0.0);
  s.sd.assign(d, 0.0);
  double n = static_cast<double>(rows.size());
  for (const auto& r : rows) {
    for (int v = 0; v < d; ++v) s.mu[v] += r[v];
  }
  for (int v = 0; v < d; ++v) s.mu[v] /= n;
  if (rows.size() > 1) {
    for (const auto& r : rows) {
      for (int v = 0; v < d; ++v) {
        double c = r[v] - s.mu[v];
        s.sd[v] += c * c;
      }
    }
    for (int v = 0; v < d; ++v) s.sd[v] = std::sqrt(s.sd[v] / (n - 1.0));
  }
  for (int v = 0; v < d; ++v) {
    if (!(s.sd[v] > 1e-12)) s.sd[v] = 1.0;
  }
  return s;
}

namespace {

// Exponent tuples of total degree g, first variable's exponent decreasing.
void append_block(int n_vars, int g, int var, std::vector<int>& current,
                  std::vector<std::vector<int>>& out) {
  if (var == n_vars - 1) {
    current[var] = g;
    out.push_back(current);
    return;
  }
  for (int e = g; e >= 0; --e) {
    current[var] = e;
    append_block(n_vars, g - e, var + 1, current, out);
  }
}

}  // namespace

PolynomialBasis::PolynomialBasis(int n_vars, int degree)
    : n_vars_(n_vars), degree_(degree) {
  if (n_vars < 1 || degree < 0) {
    throw std::invalid_argument("PolynomialBasis: need n_vars >= 1, degree >= 0");
  }
  if (n_vars * (degree + 1) > 64) {
    throw std::invalid_argument("PolynomialBasis: n_vars * (degree + 1) must be <= 64");
  }
  std::vector<int> current(n_vars, 0);
  for (int g = 0; g <= degree; ++g) {
    append_block(n_vars, g, 0, current, exponents_);
  }
}

void PolynomialBasis::eval(const double* z, double* out) const {
  // Power table: pw[v * (degree+1) + p] = z[v]^p.
  const int stride = degree_ + 1;
  double pw[64];
  for (int v = 0; v < n_vars_; ++v) {
    pw[v * stride] = 1.0;
    for (int p = 1; p <= degree_; ++p) pw[v * stride + p] = pw[v * stride + p - 1] * z[v];
  }
  for (int t = 0; t < n_terms(); ++t) {
    double prod = 1.0;
    const auto& e = exponents_[t];
    for (int v = 0; v < n_vars_; ++v) prod *= pw[v * stride + e[v]];
    out[t] = prod;
  }
}

double PolynomialBasis::value(const double* z, const double* coef) const {
  const int stride = degree_ + 1;
  double pw[64];
  for (int v = 0; v < n_vars_; ++v) {
    pw[v * stride] = 1.0;
    for (int p = 1; p <= degree_; ++p) pw[v * stride + p] = pw[v * stride + p - 1] * z[v];
  }
  double acc = 0.0;
  for (int t = 0; t < n_terms(); ++t) {
    double prod = coef[t];
    const auto& e = exponents_[t];
    for (int v = 0; v < n_vars_; ++v) prod *= pw[v * stride + e[v]];
    acc += prod;
  }
  return acc;
}

void PolynomialBasis::value_gradient(const double* z, const double* coef,
                                     double* grad) const {
  const int stride = degree_ + 1;
  double pw[64];
  for (int v = 0; v < n_vars_; ++v) {
    pw[v * stride] = 1.0;
    for (int p = 1; p <= degree_; ++p) pw[v * stride + p] = pw[v * stride + p - 1] * z[v];
  }
  for (int v = 0; v < n_vars_; ++v) grad[v] = 0.0;
  for (int t = 0; t < n_terms(); ++t) {
    const auto& e = exponents_[t];
    for (int v = 0; v < n_vars_; ++v) {
      if (e[v] == 0) continue;
      double prod = coef[t] * static_cast<double>(e[v]) * pw[v * stride + e[v] - 1];
      for (int w = 0; w < n_vars_; ++w) {
        if (w != v) prod *= pw[w * stride + e[w]];
      }
      grad[v] += prod;
    }
  }
}

}  // namespace prodspill
