#pragma once

#include <cstddef>
#include <vector>

namespace prodspill {

// Standard normal CDF.
double normal_cdf(double x);

// Standard normal quantile function (Wichura's AS 241, double precision).
// p must lie strictly inside (0, 1).
double normal_quantile(double p);

// Type-7 sample quantile: linear interpolation between order statistics at
// h = (n - 1) * p. Values need not be sorted; p must lie in [0, 1].
double quantile_type7(std::vector<double> values, double p);

double mean(const std::vector<double>& v);
// Sample standard deviation with the n-1 divisor; 0 for fewer than 2 values.
double sample_sd(const std::vector<double>& v);

}  // namespace prodspill
