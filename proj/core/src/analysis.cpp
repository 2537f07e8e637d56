#include "compound/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "compound/detection.hpp"
#include "compound/errors.hpp"
#include "compound/infotheory.hpp"

namespace compound {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct BoundInputs {
  double capacity;
  double burnashev;
  double one_minus_gamma;
};

BoundInputs bound_inputs(const Dmc& channel, double rate, int ell) {
  BoundInputs in{};
  in.capacity = capacity(channel).bits;
  if (rate < 0.0) {
    throw ArgumentError("negative rate at member " + std::to_string(ell + 1));
  }
  if (rate >= in.capacity) {
    throw ArgumentError("infeasible rate at member " + std::to_string(ell + 1) +
                        ": rate must stay below capacity " + std::to_string(in.capacity));
  }
  in.burnashev = burnashev_b(channel).value;
  if (in.burnashev <= 0.0) {
    throw ArgumentError("degenerate channel at member " + std::to_string(ell + 1) +
                        ": all row pairs coincide");
  }
  in.one_minus_gamma = 1.0 - rate / in.capacity;
  return in;
}

}  // namespace

ExponentPoint trivial_upper_bound(const CompoundFamily& family, std::span<const double> rates) {
  const int big_l = family.size();
  if (static_cast<int>(rates.size()) != big_l) {
    throw ArgumentError("rates size does not match the family");
  }
  ExponentPoint point;
  point.values.reserve(rates.size());
  for (int ell = 0; ell < big_l; ++ell) {
    const BoundInputs in = bound_inputs(family.channel(ell), rates[ell], ell);
    point.values.push_back(in.burnashev * in.one_minus_gamma);
  }
  return point;
}

ExponentPoint eer_lower_bound(const CompoundFamily& family, std::span<const double> rates,
                              std::span<const double> control_exponents) {
  const int big_l = family.size();
  if (static_cast<int>(rates.size()) != big_l ||
      static_cast<int>(control_exponents.size()) != big_l) {
    throw ArgumentError("rates and exponents must match the family size");
  }
  ExponentPoint point;
  point.values.reserve(rates.size());
  for (int ell = 0; ell < big_l; ++ell) {
    const double t = control_exponents[ell];
    if (std::isnan(t) || t < 0.0) {
      throw ArgumentError("control exponent must be nonnegative at member " +
                          std::to_string(ell + 1));
    }
    const BoundInputs in = bound_inputs(family.channel(ell), rates[ell], ell);
    const double upper = in.burnashev * in.one_minus_gamma;
    double lower;
    if (std::isinf(t)) {
      lower = upper;
    } else if (std::isinf(in.burnashev)) {
      lower = t * in.one_minus_gamma;
    } else {
      // Multiplying the upper value by a factor in [0, 1] keeps the bound
      // pair ordered under rounding.
      lower = (t / (t + in.burnashev)) * upper;
    }
    point.values.push_back(lower);
  }
  return point;
}

std::pair<double, double> phi_point(double p, double q) {
  if (!(p > 0.0) || !(p < 0.5)) {
    throw ArgumentError("crossover must lie in (0, 1/2)");
  }
  const double pb = 1.0 - p;
  if (q < p || q > pb) {
    throw ArgumentError("control threshold outside [p, 1-p]");
  }
  const double qb = 1.0 - q;
  const auto term = [](double a, double b) { return a > 0.0 ? a * std::log2(a / b) : 0.0; };
  const double base = term(p, pb) + term(pb, p);
  // The divergences are nonnegative; the endpoint q = 1-p can round a hair
  // below zero through the 1-(1-p) roundtrip.
  const double against_low = std::max(0.0, term(q, p) + term(qb, pb));
  const double against_high = std::max(0.0, term(q, pb) + term(qb, p));
  return {against_low / (against_low + base), against_high / (against_high + base)};
}

std::vector<double> phi_default_grid(double p, int size) {
  if (!(p > 0.0) || !(p < 0.5)) {
    throw ArgumentError("crossover must lie in (0, 1/2)");
  }
  if (size < 2) {
    throw ArgumentError("grid needs at least the two endpoints");
  }
  const double pb = 1.0 - p;
  const double step = (pb - p) / (size - 1);
  std::vector<double> grid(static_cast<std::size_t>(size));
  grid.front() = p;
  grid.back() = pb;
  for (int i = 1; i + 1 < size; ++i) {
    grid[static_cast<std::size_t>(i)] = std::min(p + step * i, pb);
  }
  return grid;
}

RegionCurve phi_curve(double p, std::span<const double> grid) {
  if (grid.empty()) {
    throw ArgumentError("empty threshold grid");
  }
  RegionCurve curve;
  curve.grid.assign(grid.begin(), grid.end());
  curve.labels = {"component_1", "component_2"};
  curve.points.reserve(grid.size());
  double prev = -kInf;
  for (double q : grid) {
    if (!(q > prev)) {
      throw ArgumentError("threshold grid must be strictly increasing");
    }
    prev = q;
    const auto [low, high] = phi_point(p, q);
    curve.points.push_back(ExponentPoint{{low, high}});
  }
  return curve;
}

std::vector<double> capacity_region_corner(const CompoundFamily& family) {
  return capacity_vector(family);
}

double select_operating_point(const RegionCurve& curve, std::span<const double> weights) {
  if (curve.grid.empty() || curve.points.size() != curve.grid.size()) {
    throw ArgumentError("curve grid and points disagree");
  }
  const std::size_t components = curve.points.front().values.size();
  if (weights.size() != components) {
    throw ArgumentError("weight count does not match curve components");
  }
  for (double w : weights) {
    if (!(w > 0.0)) {
      throw ArgumentError("operating-point weights must be positive");
    }
  }
  std::size_t best = 0;
  double best_score = -kInf;
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    const auto& values = curve.points[i].values;
    if (values.size() != components) {
      throw ArgumentError("curve point has inconsistent component count");
    }
    const double score = *std::min_element(values.begin(), values.end());
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return curve.grid[best];
}

namespace {

// Applies `fn(prob, outputs)` to every output sequence of positive
// probability when `inputs` is sent over `channel`. Binary outputs only.
template <typename Fn>
void for_each_output_block(const Dmc& channel, std::span<const int> inputs, Fn&& fn) {
  const int len = static_cast<int>(inputs.size());
  std::vector<int> outputs(static_cast<std::size_t>(len));
  const std::uint32_t count = 1u << len;
  for (std::uint32_t mask = 0; mask < count; ++mask) {
    double prob = 1.0;
    for (int t = 0; t < len; ++t) {
      outputs[static_cast<std::size_t>(t)] = static_cast<int>((mask >> t) & 1u);
      prob *= channel.prob(inputs[static_cast<std::size_t>(t)],
                           outputs[static_cast<std::size_t>(t)]);
    }
    if (prob > 0.0) {
      fn(prob, std::span<const int>(outputs));
    }
  }
}

// Probability that exact decoding of the full message block fails, averaged
// over a uniform message, when the block travels over `truth`.
double message_error_probability(const MessageCode& code, const Dmc& truth) {
  const std::span<const int> bits = code.segment_bits();
  std::uint64_t num_messages = 1;
  for (int b : bits) {
    num_messages <<= b;
  }
  const double per_message = 1.0 / static_cast<double>(num_messages);
  const double block_work = std::ldexp(static_cast<double>(num_messages),
                                       code.block_length());
  if (block_work > 5e7) {
    throw CapabilityError("message phase too large for exact enumeration");
  }

  std::vector<std::uint32_t> message(bits.size(), 0);
  std::vector<int> sent;
  double error = 0.0;
  for (std::uint64_t w = 0; w < num_messages; ++w) {
    code.encode_into(message, sent);
    double wrong = 0.0;
    for_each_output_block(truth, sent, [&](double prob, std::span<const int> outputs) {
      if (code.decode(outputs) != message) {
        wrong += prob;
      }
    });
    error += per_message * wrong;
    for (std::size_t s = 0; s < message.size(); ++s) {
      if (++message[s] < (1u << bits[s])) {
        break;
      }
      message[s] = 0;
    }
  }
  return error;
}

}  // namespace

EpochOracle brute_force_epoch_oracle(const SchemeParams& params, const CompoundFamily& family,
                                     const std::vector<MessageCode>& codes, int realized) {
  const int big_l = family.size();
  if (realized < 0 || realized >= big_l) {
    throw ArgumentError("realized member index out of range");
  }
  if (static_cast<int>(codes.size()) != big_l) {
    throw ArgumentError("one message code per family member required");
  }
  if (family.num_outputs() != 2) {
    throw CapabilityError("exact epoch enumeration requires binary outputs");
  }
  const int max_bm = *std::max_element(params.beta_m_len.begin(), params.beta_m_len.end());
  const int max_bc = *std::max_element(params.beta_c_len.begin(), params.beta_c_len.end());
  if (params.alpha_m_len + max_bm + params.alpha_c_len + max_bc > 16) {
    throw CapabilityError("epoch too long for exact enumeration");
  }
  for (int ell = 0; ell < big_l; ++ell) {
    if (codes[static_cast<std::size_t>(ell)].block_length() != params.beta_m_len[ell]) {
      throw ArgumentError("message code length disagrees with the derived parameters");
    }
  }

  const Dmc& truth = family.channel(realized);
  EpochOracle oracle;

  oracle.p_estimate_message.assign(static_cast<std::size_t>(big_l), 0.0);
  const TrainingSequence train_m =
      make_training_sequence(params.message_training, params.alpha_m_len, family.num_inputs());
  for_each_output_block(truth, train_m.symbols, [&](double prob, std::span<const int> outputs) {
    const int est = estimate_channel(family, params.message_rule, train_m.symbols, outputs);
    oracle.p_estimate_message[static_cast<std::size_t>(est)] += prob;
  });

  std::vector<double> message_error(static_cast<std::size_t>(big_l), 0.0);
  for (int j = 0; j < big_l; ++j) {
    if (oracle.p_estimate_message[static_cast<std::size_t>(j)] > 0.0) {
      message_error[static_cast<std::size_t>(j)] =
          message_error_probability(codes[static_cast<std::size_t>(j)], truth);
    }
  }

  oracle.p_estimate_control.assign(static_cast<std::size_t>(big_l), 0.0);
  const TrainingSequence train_c =
      make_training_sequence(params.control_training, params.alpha_c_len, family.num_inputs());
  for_each_output_block(truth, train_c.symbols, [&](double prob, std::span<const int> outputs) {
    const int est = estimate_channel(family, params.control_rule, train_c.symbols, outputs);
    oracle.p_estimate_control[static_cast<std::size_t>(est)] += prob;
  });

  std::vector<double> accept_match(static_cast<std::size_t>(big_l), 0.0);
  std::vector<double> accept_mismatch(static_cast<std::size_t>(big_l), 0.0);
  for (int i = 0; i < big_l; ++i) {
    if (oracle.p_estimate_control[static_cast<std::size_t>(i)] == 0.0) {
      continue;
    }
    const ControlTest& test = params.control_tests[i];
    const Dmc& declared = family.channel(i);
    const std::size_t len = static_cast<std::size_t>(params.beta_c_len[i]);
    for (const bool matched : {true, false}) {
      const std::vector<int> sent(len, matched ? test.accept_symbol : test.reject_symbol);
      double accept = 0.0;
      for_each_output_block(truth, sent, [&](double prob, std::span<const int> outputs) {
        if (control_decide(test, declared, outputs) == ControlDecision::Accept) {
          accept += prob;
        }
      });
      (matched ? accept_match : accept_mismatch)[static_cast<std::size_t>(i)] = accept;
    }
  }

  double pm = 0.0;
  for (int j = 0; j < big_l; ++j) {
    pm += oracle.p_estimate_message[static_cast<std::size_t>(j)] *
          message_error[static_cast<std::size_t>(j)];
  }
  double a_match = 0.0;
  double a_mismatch = 0.0;
  for (int i = 0; i < big_l; ++i) {
    a_match +=
        oracle.p_estimate_control[static_cast<std::size_t>(i)] * accept_match[static_cast<std::size_t>(i)];
    a_mismatch += oracle.p_estimate_control[static_cast<std::size_t>(i)] *
                  accept_mismatch[static_cast<std::size_t>(i)];
  }

  oracle.p_message_error = pm;
  oracle.p_control_error_given_reject = a_mismatch;
  oracle.p_accept_given_accept_sent = a_match;
  oracle.rho = (1.0 - pm) * a_match + pm * a_mismatch;
  if (oracle.rho <= 0.0) {
    throw NumericError("control test never accepts under this configuration", 0.0, 0.0);
  }
  oracle.p_session_error = pm * a_mismatch / oracle.rho;

  double lambda = static_cast<double>(params.alpha_m_len + params.alpha_c_len);
  for (int j = 0; j < big_l; ++j) {
    lambda += oracle.p_estimate_message[static_cast<std::size_t>(j)] * params.beta_m_len[j];
  }
  for (int i = 0; i < big_l; ++i) {
    lambda += oracle.p_estimate_control[static_cast<std::size_t>(i)] * params.beta_c_len[i];
  }
  oracle.expected_lambda = lambda;
  oracle.expected_tau = lambda / oracle.rho;
  oracle.expected_tau_over_n = oracle.expected_tau / params.n;
  return oracle;
}

}  // namespace compound
