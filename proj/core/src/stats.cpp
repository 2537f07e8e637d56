#include "compound/stats.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "compound/errors.hpp"

namespace compound {

namespace {

// Series expansion of P(a, x), accurate for x < a + 1.
double gamma_p_series(double a, double x) {
  const double log_prefactor = a * std::log(x) - x - std::lgamma(a);
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < 1000; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(log_prefactor);
}

// Modified Lentz continued fraction for Q(a, x), accurate for x >= a + 1.
double gamma_q_fraction(double a, double x) {
  constexpr double tiny = 1e-300;
  const double log_prefactor = a * std::log(x) - x - std::lgamma(a);
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 1000; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(log_prefactor) * h;
}

}  // namespace

double regularized_gamma_p(double a, double x) {
  if (!(a > 0.0)) throw ArgumentError("gamma shape must be positive");
  if (x < 0.0) throw ArgumentError("gamma argument must be nonnegative");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_fraction(a, x);
}

double regularized_gamma_q(double a, double x) {
  if (!(a > 0.0)) throw ArgumentError("gamma shape must be positive");
  if (x < 0.0) throw ArgumentError("gamma argument must be nonnegative");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_fraction(a, x);
}

double chi_squared_sf(double x, int df) {
  if (df <= 0) throw ArgumentError("degrees of freedom must be positive");
  if (x < 0.0) throw ArgumentError("chi-squared statistic must be nonnegative");
  return regularized_gamma_q(0.5 * df, 0.5 * x);
}

GofResult geometric_gof(std::span<const long> samples) {
  if (samples.empty()) throw ArgumentError("goodness-of-fit needs samples");
  long max_k = 0;
  double sum = 0.0;
  for (long k : samples) {
    if (k < 1) throw ArgumentError("geometric samples must be positive integers");
    max_k = std::max(max_k, k);
    sum += static_cast<double>(k);
  }
  const double n = static_cast<double>(samples.size());
  const double rho = n / sum;
  std::vector<double> observed(static_cast<std::size_t>(max_k) + 1, 0.0);
  for (long k : samples) observed[static_cast<std::size_t>(k)] += 1.0;

  // Bins {1}, {2}, ... with a pooled geometric tail; walk forward and close
  // the tail as soon as its expected mass would drop below 5.
  constexpr double kMinExpected = 5.0;
  std::vector<double> bin_observed, bin_expected;
  double survival = 1.0;  // P(K >= k) before bin k
  long k = 1;
  while (true) {
    const double tail_expected = n * survival;
    const double cell_expected = n * survival * rho;
    const double next_tail = tail_expected - cell_expected;
    if (next_tail < kMinExpected || k > max_k) {
      double tail_observed = 0.0;
      for (long j = k; j <= max_k; ++j) tail_observed += observed[static_cast<std::size_t>(j)];
      bin_observed.push_back(tail_observed);
      bin_expected.push_back(tail_expected);
      break;
    }
    bin_observed.push_back(observed[static_cast<std::size_t>(k)]);
    bin_expected.push_back(cell_expected);
    survival *= 1.0 - rho;
    ++k;
  }
  // The pooled tail can still be thin when rho is close to 1; merge backward.
  while (bin_expected.size() > 1 && bin_expected.back() < kMinExpected) {
    bin_expected[bin_expected.size() - 2] += bin_expected.back();
    bin_observed[bin_observed.size() - 2] += bin_observed.back();
    bin_expected.pop_back();
    bin_observed.pop_back();
  }

  GofResult result;
  result.bins = static_cast<int>(bin_expected.size());
  result.degrees_of_freedom = result.bins - 2;
  result.rate_estimate = rho;
  if (result.degrees_of_freedom < 1) {
    throw ArgumentError("too few goodness-of-fit bins with expected count >= 5");
  }
  for (std::size_t i = 0; i < bin_expected.size(); ++i) {
    const double diff = bin_observed[i] - bin_expected[i];
    result.statistic += diff * diff / bin_expected[i];
  }
  result.p_value = chi_squared_sf(result.statistic, result.degrees_of_freedom);
  return result;
}

}  // namespace compound
