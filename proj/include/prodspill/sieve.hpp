#pragma once

#include <vector>

namespace prodspill {

// Per-variable affine standardization applied before basis expansion.
struct ZScaling {
  std::vector<double> mu;
  std::vector<double> sd;  // strictly positive

  int n_vars() const { return static_cast<int>(mu.size()); }
  void apply(const double* z, double* u) const;
};

// Column means and sds (n-1 divisor) of the rows; sd floors at a small
// positive value so constant columns stay usable.
ZScaling fit_scaling(const std::vector<std::vector<double>>& rows);

// Full polynomial basis of total degree <= degree in n_vars variables.
// Terms are ordered graded lexicographically with the constant term first:
// degree blocks ascending, and within a block the exponent of the first
// variable decreases first.
class PolynomialBasis {
 public:
  PolynomialBasis(int n_vars, int degree);

  int n_vars() const { return n_vars_; }
  int degree() const { return degree_; }
  int n_terms() const { return static_cast<int>(exponents_.size()); }
  const std::vector<std::vector<int>>& exponents() const { return exponents_; }

  // Writes the n_terms basis values at z.
  void eval(const double* z, double* out) const;
  // Value of coef'basis(z).
  double value(const double* z, const double* coef) const;
  // Gradient of coef'basis(z) with respect to each of the n_vars inputs.
  void value_gradient(const double* z, const double* coef, double* grad) const;

 private:
  int n_vars_;
  int degree_;
  std::vector<std::vector<int>> exponents_;
};

}  // namespace prodspill
