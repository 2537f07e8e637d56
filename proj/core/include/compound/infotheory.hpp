#pragma once

#include <limits>
#include <span>
#include <vector>

#include "compound/channel.hpp"

namespace compound {

inline constexpr double kDefaultTolerance = 1e-9;
inline constexpr int kMaxIterations = 100000;

/// Shannon entropy in bits; 0 log 0 = 0.
double entropy_bits(std::span<const double> p);

/// h(p) = -p log2 p - (1-p) log2 (1-p).
double binary_entropy(double p);

/// D(p || q) in bits. Conventions: 0 log(0/q) = 0; the result is +infinity
/// exactly when p(y) > 0 and q(y) = 0 for some y (a true infinity, not a
/// sentinel). Throws ArgumentError if the spans differ in length, are empty,
/// or are not distributions.
double kl_divergence(std::span<const double> p, std::span<const double> q);

/// Binary KL D((a,1-a) || (b,1-b)) in bits, same conventions.
double binary_kl(double a, double b);

/// I(P, Q) in bits for input distribution P over the channel's inputs.
double mutual_information(std::span<const double> input, const Dmc& channel);

struct CapacityResult {
  double bits = 0.0;
  std::vector<double> input_distribution;
  int iterations = 0;
};

/// Channel capacity by Blahut-Arimoto. Alternates the input update with the
/// standard bracket: lower = I(P,Q), upper = max_x D(Q(.|x) || q_P); the lower
/// bound is nondecreasing and the returned value is the final lower bound,
/// with upper - lower <= tol. Throws NumericError carrying the best bracket if
/// the iteration cap is hit first.
CapacityResult capacity(const Dmc& channel, double tol = kDefaultTolerance);

struct BurnashevResult {
  double value = 0.0;  // +infinity when some ordered pair has disjoint support
  int accept_symbol = 0;
  int reject_symbol = 0;
  bool is_infinite() const { return value == std::numeric_limits<double>::infinity(); }
};

/// B_Q = max over ordered input pairs (x_A, x_R) of D(Q(.|x_A) || Q(.|x_R)),
/// evaluated through kl_divergence. Exhaustive scan; ties resolve to the
/// lexicographically smallest (x_A, x_R).
BurnashevResult burnashev_b(const Dmc& channel);

/// max_P min_ell I(P, Q_ell): the single-rate capacity without feedback.
/// Solved through the saddle point: the outer minimization over mixture
/// weights on the family wraps a weighted Blahut-Arimoto inner ascent, and the
/// primal/dual bracket certifies the tolerance.
double compound_capacity_nofeedback(const CompoundFamily& family,
                                    double tol = kDefaultTolerance);

/// min_ell C_ell: the opportunistic-baseline rate with feedback.
double compound_capacity_feedback(const CompoundFamily& family,
                                  double tol = kDefaultTolerance);

/// (C_1, ..., C_L): the corner point of the opportunistic capacity region.
std::vector<double> capacity_vector(const CompoundFamily& family,
                                    double tol = kDefaultTolerance);

}  // namespace compound
