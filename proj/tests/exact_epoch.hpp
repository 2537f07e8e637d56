#pragma once

// Reference epoch enumeration used by the tests. Walks the full outcome tree
// of one epoch (training, message, retrain, control) leaf by leaf and applies
// its own copies of the decision rules, so it shares no probability
// bookkeeping with the library oracle it is checked against. Binary outputs
// only; meant for epochs short enough to enumerate.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "compound/channel.hpp"
#include "compound/detection.hpp"
#include "compound/scheme.hpp"

namespace reference {

struct EpochTruth {
  std::vector<double> p_estimate_message;
  std::vector<double> p_estimate_control;
  double p_message_error = 0.0;
  double p_control_error_given_reject = 0.0;
  double p_accept_given_accept_sent = 0.0;
  double rho = 0.0;
  double p_session_error = 0.0;
  double expected_lambda = 0.0;
  double expected_tau = 0.0;
};

namespace detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// log2 Q(y|x) with -inf for zero mass.
inline double log_prob(const compound::Dmc& ch, int x, int y) {
  const double p = ch.prob(x, y);
  return p > 0.0 ? std::log2(p) : -kInf;
}

// Own copy of the estimator decision.
inline int decide_member(const compound::CompoundFamily& family,
                         const compound::EstimationRule& rule, const std::vector<int>& training,
                         const std::vector<int>& outputs) {
  if (rule.kind == compound::EstimatorKind::BscThreshold) {
    const int low =
        family.channel(0).prob(0, 1) <= family.channel(1).prob(0, 1) ? 0 : 1;
    long ones = 0;
    for (int y : outputs) ones += y;
    const double fraction = static_cast<double>(ones) / static_cast<double>(outputs.size());
    return fraction < rule.threshold ? low : 1 - low;
  }
  int best = 0;
  double best_score = -kInf;
  for (int ell = 0; ell < family.size(); ++ell) {
    double score = 0.0;
    for (std::size_t t = 0; t < training.size(); ++t) {
      score += log_prob(family.channel(ell), training[t], outputs[t]);
    }
    if (score > best_score) {
      best_score = score;
      best = ell;
    }
  }
  return best;
}

// Own copy of the full-block likelihood decode over every message of the
// code. Scanning messages in odometer order (first segment fastest) and
// keeping the first maximum reproduces per-segment smallest-index ties,
// because tied full blocks tie segment by segment.
inline std::vector<std::uint32_t> decode_message(const compound::MessageCode& code,
                                                 const compound::Dmc& channel,
                                                 const std::vector<int>& outputs) {
  const auto bits = code.segment_bits();
  std::vector<std::uint32_t> message(bits.size(), 0);
  std::vector<std::uint32_t> best_message;
  double best_score = -kInf;
  std::vector<int> sent;
  std::uint64_t total = 1;
  for (int b : bits) total <<= b;
  for (std::uint64_t w = 0; w < total; ++w) {
    code.encode_into(message, sent);
    double score = 0.0;
    for (std::size_t t = 0; t < sent.size(); ++t) {
      score += log_prob(channel, sent[t], outputs[t]);
    }
    if (score > best_score) {
      best_score = score;
      best_message = message;
    }
    for (std::size_t s = 0; s < message.size(); ++s) {
      if (++message[s] < (1u << bits[s])) break;
      message[s] = 0;
    }
  }
  return best_message;
}

// Own copy of the one-sided control rule.
inline bool control_accepts(const compound::ControlTest& test, const compound::Dmc& declared,
                            const std::vector<int>& outputs) {
  double sum_accept = 0.0, sum_reject = 0.0;
  for (int y : outputs) {
    sum_accept += log_prob(declared, test.accept_symbol, y);
    sum_reject += log_prob(declared, test.reject_symbol, y);
  }
  if (std::isinf(sum_accept)) return false;
  const double llr = std::isinf(sum_reject) ? kInf : sum_accept - sum_reject;
  const int m = static_cast<int>(outputs.size());
  double divergence = 0.0;
  for (int y = 0; y < declared.num_outputs(); ++y) {
    const double a = declared.prob(test.accept_symbol, y);
    const double r = declared.prob(test.reject_symbol, y);
    if (a > 0.0) {
      if (r == 0.0) {
        divergence = kInf;
        break;
      }
      divergence += a * std::log2(a / r);
    }
  }
  const double threshold =
      divergence - std::pow(static_cast<double>(m), -test.slack_exponent);
  return llr / m >= threshold;
}

// Calls fn(probability, outputs) for every positive-probability binary output
// block of `inputs` under `truth`.
template <typename Fn>
void each_block(const compound::Dmc& truth, const std::vector<int>& inputs, Fn&& fn) {
  const int len = static_cast<int>(inputs.size());
  std::vector<int> outputs(static_cast<std::size_t>(len));
  for (std::uint32_t mask = 0; mask < (1u << len); ++mask) {
    double prob = 1.0;
    for (int t = 0; t < len; ++t) {
      outputs[static_cast<std::size_t>(t)] = static_cast<int>((mask >> t) & 1u);
      prob *= truth.prob(inputs[static_cast<std::size_t>(t)], outputs[static_cast<std::size_t>(t)]);
    }
    if (prob > 0.0) fn(prob, outputs);
  }
}

inline std::vector<int> training_block(compound::TrainingKind kind, int length, int num_inputs) {
  std::vector<int> symbols(static_cast<std::size_t>(length));
  for (int t = 0; t < length; ++t) {
    symbols[static_cast<std::size_t>(t)] = kind == compound::TrainingKind::RoundRobin ? t % num_inputs : 0;
  }
  return symbols;
}

}  // namespace detail

// Exact single-epoch law by leaf enumeration. Every conditional branch of the
// epoch (estimates, the uniform message, decode, the sender's accept choice,
// the control decision) is walked explicitly, with no independence shortcuts.
inline EpochTruth enumerate_epoch(const compound::SchemeParams& params,
                                  const compound::CompoundFamily& family,
                                  const std::vector<compound::MessageCode>& codes, int realized) {
  if (family.num_outputs() != 2) {
    throw std::invalid_argument("reference enumeration handles binary outputs only");
  }
  const compound::Dmc& truth = family.channel(realized);
  const int big_l = family.size();
  EpochTruth out;
  out.p_estimate_message.assign(static_cast<std::size_t>(big_l), 0.0);
  out.p_estimate_control.assign(static_cast<std::size_t>(big_l), 0.0);

  double p_matched = 0.0, p_mismatched = 0.0;
  double p_accept_and_matched = 0.0, p_accept_and_mismatched = 0.0;
  double mean_length = 0.0;

  const std::vector<int> train_m =
      detail::training_block(params.message_training, params.alpha_m_len, family.num_inputs());
  const std::vector<int> train_c =
      detail::training_block(params.control_training, params.alpha_c_len, family.num_inputs());

  detail::each_block(truth, train_m, [&](double p_tm, const std::vector<int>& tm_out) {
    const int est_m = detail::decide_member(family, params.message_rule, train_m, tm_out);
    out.p_estimate_message[static_cast<std::size_t>(est_m)] += p_tm;
    const compound::MessageCode& code = codes[static_cast<std::size_t>(est_m)];

    const auto bits = code.segment_bits();
    std::uint64_t num_messages = 1;
    for (int b : bits) num_messages <<= b;
    const double p_message = 1.0 / static_cast<double>(num_messages);

    std::vector<std::uint32_t> sent_message(bits.size(), 0);
    std::vector<int> sent_block;
    for (std::uint64_t w = 0; w < num_messages; ++w) {
      code.encode_into(sent_message, sent_block);
      detail::each_block(truth, sent_block, [&](double p_msg_block, const std::vector<int>& msg_out) {
        const bool matched = detail::decode_message(code, family.channel(est_m), msg_out) == sent_message;
        const double p_branch = p_tm * p_message * p_msg_block;
        (matched ? p_matched : p_mismatched) += p_branch;

        detail::each_block(truth, train_c, [&](double p_tc, const std::vector<int>& tc_out) {
          const int est_c = detail::decide_member(family, params.control_rule, train_c, tc_out);
          const compound::ControlTest& test = params.control_tests[static_cast<std::size_t>(est_c)];
          const std::vector<int> control_block(
              static_cast<std::size_t>(params.beta_c_len[static_cast<std::size_t>(est_c)]),
              matched ? test.accept_symbol : test.reject_symbol);
          const double length =
              static_cast<double>(params.alpha_m_len + params.alpha_c_len) +
              static_cast<double>(code.block_length()) +
              static_cast<double>(control_block.size());
          detail::each_block(truth, control_block, [&](double p_ct, const std::vector<int>& ct_out) {
            const double p_leaf = p_branch * p_tc * p_ct;
            mean_length += p_leaf * length;
            if (detail::control_accepts(test, family.channel(est_c), ct_out)) {
              (matched ? p_accept_and_matched : p_accept_and_mismatched) += p_leaf;
            }
          });
        });
      });
      for (std::size_t s = 0; s < sent_message.size(); ++s) {
        if (++sent_message[s] < (1u << bits[s])) break;
        sent_message[s] = 0;
      }
    }
  });

  detail::each_block(truth, train_c, [&](double p_tc, const std::vector<int>& tc_out) {
    const int est_c = detail::decide_member(family, params.control_rule, train_c, tc_out);
    out.p_estimate_control[static_cast<std::size_t>(est_c)] += p_tc;
  });

  out.p_message_error = p_mismatched;
  out.p_accept_given_accept_sent = p_matched > 0.0 ? p_accept_and_matched / p_matched : 0.0;
  out.p_control_error_given_reject =
      p_mismatched > 0.0 ? p_accept_and_mismatched / p_mismatched : 0.0;
  out.rho = p_accept_and_matched + p_accept_and_mismatched;
  out.p_session_error = out.rho > 0.0 ? p_accept_and_mismatched / out.rho : 0.0;
  out.expected_lambda = mean_length;
  out.expected_tau = out.rho > 0.0 ? mean_length / out.rho : detail::kInf;
  return out;
}

}  // namespace reference
