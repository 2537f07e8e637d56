#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "compound/channel.hpp"
#include "compound/scheme.hpp"

namespace compound {

// Closed-form exponent bounds, the scaled tradeoff curves, and the exact
// single-epoch enumeration oracle.

struct ExponentPoint {
  std::vector<double> values;  // one exponent per family member, bits/use
};

struct RegionCurve {
  std::vector<double> grid;  // strictly increasing parameter values
  std::vector<ExponentPoint> points;
  std::vector<std::string> labels;  // one per component
};

// Achievable-exponent floor at these rates when the control phase is priced
// by the given estimation exponents: (T/(T+B)) * B * (1 - R/C) per member.
ExponentPoint eer_lower_bound(const CompoundFamily& family, std::span<const double> rates,
                              std::span<const double> control_exponents);

// Single-channel ceiling B * (1 - R/C) per member.
ExponentPoint trivial_upper_bound(const CompoundFamily& family, std::span<const double> rates);

// Scaled exponent pair of the symmetric binary pair at control threshold q:
// (D(q||p)/(D(q||p)+B), D(q||1-p)/(D(q||1-p)+B)) with B = D(p||1-p). Defined
// on the closed interval [p, 1-p]; the ends evaluate to the analytic limits
// (0, 1/2) and (1/2, 0).
std::pair<double, double> phi_point(double p, double q);

// Uniform threshold grid of `size` points spanning [p, 1-p] inclusive.
std::vector<double> phi_default_grid(double p, int size = 201);

RegionCurve phi_curve(double p, std::span<const double> grid);

// Corner of the opportunistic-rate hyper-rectangle: the member capacities.
std::vector<double> capacity_region_corner(const CompoundFamily& family);

// Grid parameter whose exponent point maximizes the smallest component.
// Weights must be positive; they are validated and recorded for reporting,
// but the asymptotic max-min rule decides the selection.
double select_operating_point(const RegionCurve& curve, std::span<const double> weights);

struct EpochOracle {
  // Distribution of the two channel estimates in one epoch.
  std::vector<double> p_estimate_message;
  std::vector<double> p_estimate_control;
  double p_message_error = 0.0;               // P(decoded payload != sent payload)
  double p_control_error_given_reject = 0.0;  // P(accept | reject sequence sent)
  double p_accept_given_accept_sent = 0.0;
  double rho = 0.0;                // P(epoch decides accept)
  double p_session_error = 0.0;    // assembled session error probability
  double expected_lambda = 0.0;    // mean epoch length, channel uses
  double expected_tau = 0.0;       // expected_lambda / rho
  double expected_tau_over_n = 0.0;
};

// Exact epoch statistics by enumeration over all output sequences of every
// phase, against the actual estimator, decoder, and control-test rules and
// the fixed codebook instance. Session-level quantities follow from the
// epoch independence of the retransmission loop. Requires binary outputs and
// a total epoch length of at most 16 symbols.
EpochOracle brute_force_epoch_oracle(const SchemeParams& params, const CompoundFamily& family,
                                     const std::vector<MessageCode>& codes, int realized);

}  // namespace compound
