#pragma once

#include <span>

namespace compound {

// Regularized lower incomplete gamma P(a, x); Q(a, x) = 1 - P(a, x).
double regularized_gamma_p(double a, double x);
double regularized_gamma_q(double a, double x);

// Survival function of the chi-squared distribution with df degrees of
// freedom, evaluated at statistic x.
double chi_squared_sf(double x, int df);

struct GofResult {
  double statistic = 0.0;
  int bins = 0;
  int degrees_of_freedom = 0;
  double p_value = 0.0;
  double rate_estimate = 0.0;  // success probability fitted from the sample
};

// Pearson goodness-of-fit of positive integer samples against the geometric
// law with success probability fitted as 1/mean. Bins are {1}, {2}, ... with
// a pooled tail, merged so every expected count is at least 5; degrees of
// freedom = bins - 2 (one fitted parameter). Throws when fewer than three
// bins survive merging.
GofResult geometric_gof(std::span<const long> samples);

}  // namespace compound
