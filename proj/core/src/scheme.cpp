#include "compound/scheme.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "compound/errors.hpp"

namespace compound {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void validate_options(const DeriveOptions& options) {
  if (options.alpha_m.kind == AlphaSchedule::Kind::Power &&
      !(options.alpha_m.exponent > 0.0 && options.alpha_m.exponent < 1.0)) {
    throw ArgumentError("training schedule exponent must lie in (0,1)");
  }
  if (!(options.margin_coefficient >= 0.0)) {
    throw ArgumentError("margin coefficient must be nonnegative");
  }
  if (!(options.kappa_max > 0.0)) {
    throw ArgumentError("kappa cap must be positive");
  }
  if (!(options.slack_exponent > 0.0 && options.slack_exponent < 1.0)) {
    throw ArgumentError("control slack exponent must lie in (0,1)");
  }
  if (options.epoch_cap < 1) {
    throw ArgumentError("epoch cap must be positive");
  }
  if (options.max_segment_bits < 1 || options.max_segment_bits > 16) {
    throw ArgumentError("segment size must lie in [1,16] bits");
  }
}

}  // namespace

int AlphaSchedule::length_at(int n) const {
  if (n < 2) throw ArgumentError("block scale must be at least 2");
  double value;
  if (kind == Kind::LogRatio) {
    value = static_cast<double>(n) / std::log2(static_cast<double>(n));
  } else {
    value = std::pow(static_cast<double>(n), exponent);
  }
  return std::max(1, static_cast<int>(std::floor(value)));
}

long SchemeParams::epoch_length(int estimate_message, int estimate_control) const {
  return static_cast<long>(alpha_m_len) + beta_m_len[estimate_message] +
         static_cast<long>(alpha_c_len) + beta_c_len[estimate_control];
}

SchemeParams derive_params(const CompoundFamily& family, std::span<const double> rates,
                           std::span<const double> control_exponents,
                           const EstimationRule& message_rule, const EstimationRule& control_rule,
                           int n, int reference_index, const DeriveOptions& options) {
  const int big_l = family.size();
  if (static_cast<int>(rates.size()) != big_l) {
    throw ArgumentError("rate vector length does not match the family");
  }
  if (static_cast<int>(control_exponents.size()) != big_l) {
    throw ArgumentError("control exponent vector length does not match the family");
  }
  if (reference_index < 0 || reference_index >= big_l) {
    throw ArgumentError("reference index outside the family");
  }
  if (n < 4) throw ArgumentError("block scale must be at least 4");
  validate_options(options);

  SchemeParams p;
  p.n = n;
  p.reference_index = reference_index;
  p.rates.assign(rates.begin(), rates.end());
  p.message_rule = message_rule;
  p.control_rule = control_rule;
  p.message_training =
      message_rule.kind == EstimatorKind::BscThreshold ? TrainingKind::AllZero : options.ml_training;
  p.control_training =
      control_rule.kind == EstimatorKind::BscThreshold ? TrainingKind::AllZero : options.ml_training;
  p.max_segment_bits = options.max_segment_bits;
  p.epoch_cap = options.epoch_cap;

  p.capacities.resize(big_l);
  p.burnashev.resize(big_l);
  p.kappa.resize(big_l);
  p.gamma.resize(big_l);
  p.zeta.resize(big_l);
  p.xi.resize(big_l);
  p.codebook_inputs.resize(big_l);
  p.control_tests.resize(big_l);

  for (int ell = 0; ell < big_l; ++ell) {
    const Dmc& ch = family.channel(ell);
    const CapacityResult cap = capacity(ch);
    p.capacities[ell] = cap.bits;
    p.codebook_inputs[ell] = cap.input_distribution;
    if (!(rates[ell] >= 0.0)) {
      throw ArgumentError("rates must be nonnegative");
    }
    if (rates[ell] >= cap.bits) {
      std::ostringstream msg;
      msg << "infeasible rate " << rates[ell] << " at member " << ell + 1 << ": capacity is "
          << cap.bits;
      throw ArgumentError(msg.str());
    }
    const BurnashevResult b = burnashev_b(ch);
    if (b.value == 0.0) {
      std::ostringstream msg;
      msg << "degenerate channel at member " << ell + 1 << ": no separated control pair";
      throw ArgumentError(msg.str());
    }
    p.burnashev[ell] = b.value;
    if (!(control_exponents[ell] > 0.0)) {
      throw ArgumentError("control estimation exponents must be positive");
    }
    double ratio;
    if (std::isinf(control_exponents[ell]) && std::isinf(b.value)) {
      ratio = options.kappa_max;
    } else {
      ratio = control_exponents[ell] / b.value;
    }
    p.kappa[ell] = std::min(options.kappa_max, ratio);
    p.gamma[ell] = rates[ell] / cap.bits;
    p.zeta[ell] = (1.0 - p.gamma[ell]) / (1.0 + p.kappa[ell]);
    p.control_tests[ell] = make_control_test(ch);
    p.control_tests[ell].slack_exponent = options.slack_exponent;
  }

  const double zeta_star = p.zeta[reference_index];
  p.alpha_m_len = options.alpha_m.length_at(n);
  p.alpha_c_len = std::max(1, static_cast<int>(std::ceil(zeta_star * n)));
  p.beta_m_len.resize(big_l);
  p.beta_c_len.resize(big_l);
  p.message_bits.resize(big_l);
  for (int ell = 0; ell < big_l; ++ell) {
    p.xi[ell] = zeta_star / p.zeta[ell];
    p.beta_c_len[ell] =
        std::max(1, static_cast<int>(std::ceil(p.kappa[ell] * zeta_star * n)));
    const double payload = n * p.xi[ell] * rates[ell];
    const int bits = static_cast<int>(std::llround(payload));
    p.message_bits[ell] = bits;
    const double target = n * p.xi[ell] * p.gamma[ell];
    long len = static_cast<long>(std::floor(target)) + 1;
    len = std::max(len, static_cast<long>(std::ceil(
                            target + options.margin_coefficient * std::sqrt(target))));
    if (bits > 0) {
      len = std::max(len, static_cast<long>(std::floor(bits / p.capacities[ell])) + 1);
    }
    p.beta_m_len[ell] = static_cast<int>(len);
  }
  return p;
}

Codebook Codebook::build(const Dmc& channel, std::span<const double> input_law, int num_messages,
                         int block_length, std::mt19937_64& rng) {
  if (num_messages < 1) throw ArgumentError("codebook needs at least one message");
  if (block_length < 1) throw ArgumentError("codebook block length must be positive");
  if (static_cast<int>(input_law.size()) != channel.num_inputs()) {
    throw ArgumentError("input law does not match the channel alphabet");
  }
  Codebook book;
  book.num_messages_ = num_messages;
  book.block_length_ = block_length;
  book.loglik_.resize(channel.num_inputs());
  for (int x = 0; x < channel.num_inputs(); ++x) {
    book.loglik_[x].resize(channel.num_outputs());
    for (int y = 0; y < channel.num_outputs(); ++y) {
      const double v = channel.prob(x, y);
      book.loglik_[x][y] = v > 0.0 ? std::log2(v) : -kInf;
    }
  }

  // Cumulative input law for the draws.
  std::vector<double> cdf(input_law.size());
  double acc = 0.0;
  for (std::size_t x = 0; x < input_law.size(); ++x) {
    acc += input_law[x];
    cdf[x] = acc;
  }

  const int nx = channel.num_inputs();
  if (num_messages > 1) {
    int support = 0;
    for (const double w : input_law) {
      if (w > 0.0) ++support;
    }
    long double space = 1.0L;
    for (int t = 0; t < block_length && space < static_cast<long double>(num_messages); ++t) {
      space *= support;
    }
    if (space < static_cast<long double>(num_messages)) {
      throw ArgumentError("message set larger than the codeword space");
    }
  }
  book.symbols_.assign(static_cast<std::size_t>(num_messages) * block_length, 0);
  std::set<std::vector<int>> seen;
  std::vector<int> word(static_cast<std::size_t>(block_length));
  long redraws = 0;
  const long redraw_budget = 64L * num_messages + 1024;
  for (int i = 0; i < num_messages; ++i) {
    for (;;) {
      for (int t = 0; t < block_length; ++t) {
        const double u = uniform01(rng);
        int x = 0;
        while (x < nx - 1 && u >= cdf[x]) ++x;
        word[static_cast<std::size_t>(t)] = x;
      }
      // Only the colliding draw is rejected; the stream just continues.
      if (num_messages == 1 || seen.insert(word).second) break;
      if (++redraws > redraw_budget) {
        throw NumericError("could not draw distinct codewords", 0.0, 0.0);
      }
    }
    std::copy(word.begin(), word.end(),
              book.symbols_.begin() + static_cast<std::size_t>(i) * block_length);
  }

  // Symmetric binary channels decode by codeword distance on packed bits.
  if (channel.num_inputs() == 2 && channel.num_outputs() == 2) {
    const double p01 = channel.prob(0, 1);
    const double p10 = channel.prob(1, 0);
    if (p01 == p10 && p01 > 0.0 && p01 < 1.0 && p01 != 0.5) {
      book.packed_ = true;
      book.prefer_far_ = p01 > 0.5;
      book.words_per_codeword_ = (block_length + 63) / 64;
      book.packed_words_.assign(
          static_cast<std::size_t>(num_messages) * book.words_per_codeword_, 0);
      for (int i = 0; i < num_messages; ++i) {
        for (int t = 0; t < block_length; ++t) {
          if (book.symbols_[static_cast<std::size_t>(i) * block_length + t] != 0) {
            book.packed_words_[static_cast<std::size_t>(i) * book.words_per_codeword_ + t / 64] |=
                std::uint64_t{1} << (t % 64);
          }
        }
      }
    }
  }
  return book;
}

std::span<const int> Codebook::codeword(int message) const {
  if (message < 0 || message >= num_messages_) {
    throw ArgumentError("message index outside the codebook");
  }
  return {symbols_.data() + static_cast<std::size_t>(message) * block_length_,
          static_cast<std::size_t>(block_length_)};
}

int Codebook::decode(std::span<const int> outputs) const {
  if (static_cast<int>(outputs.size()) != block_length_) {
    throw ArgumentError("output block length does not match the codebook");
  }
  if (packed_) {
    std::vector<std::uint64_t> received(static_cast<std::size_t>(words_per_codeword_), 0);
    for (int t = 0; t < block_length_; ++t) {
      const int y = outputs[t];
      if (y < 0 || y > 1) throw ArgumentError("output symbol outside alphabet");
      if (y != 0) received[t / 64] |= std::uint64_t{1} << (t % 64);
    }
    int best = 0;
    int best_distance = prefer_far_ ? -1 : block_length_ + 1;
    for (int i = 0; i < num_messages_; ++i) {
      const std::uint64_t* words =
          packed_words_.data() + static_cast<std::size_t>(i) * words_per_codeword_;
      int d = 0;
      for (int w = 0; w < words_per_codeword_; ++w) {
        d += std::popcount(words[w] ^ received[w]);
      }
      if (prefer_far_ ? d > best_distance : d < best_distance) {
        best_distance = d;
        best = i;
      }
    }
    return best;
  }
  int best = 0;
  double best_score = -kInf;
  bool first = true;
  for (int i = 0; i < num_messages_; ++i) {
    const int* word = symbols_.data() + static_cast<std::size_t>(i) * block_length_;
    double score = 0.0;
    for (int t = 0; t < block_length_; ++t) {
      const int y = outputs[t];
      if (y < 0 || y >= static_cast<int>(loglik_[0].size())) {
        throw ArgumentError("output symbol outside alphabet");
      }
      score += loglik_[word[t]][y];
      if (score == -kInf) break;
    }
    if (first || score > best_score) {
      best_score = score;
      best = i;
      first = false;
    }
  }
  return best;
}

Codebook build_codebook(const Dmc& channel, double rate, int block_length, std::mt19937_64& rng) {
  if (!(rate >= 0.0)) throw ArgumentError("codebook rate must be nonnegative");
  if (block_length < 1) throw ArgumentError("codebook block length must be positive");
  const CapacityResult cap = capacity(channel);
  if (rate >= cap.bits) {
    std::ostringstream msg;
    msg << "infeasible codebook rate " << rate << ": capacity is " << cap.bits;
    throw ArgumentError(msg.str());
  }
  const double count = std::exp2(static_cast<double>(block_length) * rate);
  if (count > 1e6) {
    throw CapabilityError("codebook too large for explicit construction");
  }
  const int num_messages = static_cast<int>(std::llround(count));
  return Codebook::build(channel, cap.input_distribution, num_messages, block_length, rng);
}

MessageCode MessageCode::build(const Dmc& channel, std::span<const double> input_law,
                               int total_bits, int block_length, int max_segment_bits,
                               RngSeed seed, std::uint64_t stream_base) {
  if (total_bits < 0) throw ArgumentError("payload size must be nonnegative");
  if (block_length < 1) throw ArgumentError("message block length must be positive");
  if (max_segment_bits < 1 || max_segment_bits > 16) {
    throw ArgumentError("segment size must lie in [1,16] bits");
  }
  const double info = mutual_information(input_law, channel);
  if (total_bits > 0 && static_cast<double>(total_bits) >= info * block_length) {
    throw ArgumentError("message block too short: payload rate reaches the channel information");
  }

  MessageCode code;
  code.total_bits_ = total_bits;
  code.block_length_ = block_length;
  const int segments = total_bits > 0 ? (total_bits + max_segment_bits - 1) / max_segment_bits : 1;
  if (block_length < segments) {
    throw ArgumentError("message block too short for the segment count");
  }
  code.segment_bits_.assign(segments, total_bits / segments);
  for (int s = 0; s < total_bits % segments; ++s) code.segment_bits_[s] += 1;

  // Split the block proportionally to the per-segment payload, largest
  // remainders first, then repair any segment whose rate is not below the
  // channel information by borrowing from the slackest one.
  code.segment_lengths_.assign(segments, 0);
  if (total_bits == 0) {
    code.segment_lengths_[0] = block_length;
  } else {
    std::vector<double> share(segments);
    int assigned = 0;
    for (int s = 0; s < segments; ++s) {
      share[s] = static_cast<double>(block_length) * code.segment_bits_[s] / total_bits;
      code.segment_lengths_[s] = static_cast<int>(std::floor(share[s]));
      assigned += code.segment_lengths_[s];
    }
    std::vector<int> order(segments);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      const double fa = share[a] - std::floor(share[a]);
      const double fb = share[b] - std::floor(share[b]);
      if (fa != fb) return fa > fb;
      return a < b;
    });
    for (int i = 0; assigned < block_length; ++i, ++assigned) {
      code.segment_lengths_[order[i % segments]] += 1;
    }
    for (int guard = 0; guard < segments * block_length; ++guard) {
      int violating = -1;
      for (int s = 0; s < segments; ++s) {
        if (code.segment_bits_[s] >= info * code.segment_lengths_[s]) {
          violating = s;
          break;
        }
      }
      if (violating < 0) break;
      int donor = -1;
      double best_slack = 0.0;
      for (int s = 0; s < segments; ++s) {
        if (s == violating || code.segment_lengths_[s] <= 1) continue;
        const double slack = info * (code.segment_lengths_[s] - 1) - code.segment_bits_[s];
        if (slack > best_slack) {
          best_slack = slack;
          donor = s;
        }
      }
      if (donor < 0) {
        throw ArgumentError("message block too short to keep every segment below capacity");
      }
      code.segment_lengths_[donor] -= 1;
      code.segment_lengths_[violating] += 1;
    }
  }

  code.segments_.reserve(segments);
  for (int s = 0; s < segments; ++s) {
    auto rng = make_stream(seed, stream_id(stream_base, static_cast<std::uint64_t>(s)));
    const int m = 1 << code.segment_bits_[s];
    code.segments_.push_back(
        Codebook::build(channel, input_law, m, code.segment_lengths_[s], rng));
  }
  return code;
}

std::vector<std::uint32_t> MessageCode::sample_message(std::mt19937_64& rng) const {
  std::vector<std::uint32_t> message(segments_.size(), 0);
  for (std::size_t s = 0; s < segments_.size(); ++s) {
    const std::uint32_t m = static_cast<std::uint32_t>(segments_[s].num_messages());
    if (m > 1) {
      // Message counts are powers of two, so masking is exactly uniform.
      message[s] = static_cast<std::uint32_t>(rng()) & (m - 1);
    }
  }
  return message;
}

void MessageCode::encode_into(std::span<const std::uint32_t> message,
                              std::vector<int>& out) const {
  if (message.size() != segments_.size()) {
    throw ArgumentError("message segment count does not match the code");
  }
  out.clear();
  out.reserve(block_length_);
  for (std::size_t s = 0; s < segments_.size(); ++s) {
    const auto word = segments_[s].codeword(static_cast<int>(message[s]));
    out.insert(out.end(), word.begin(), word.end());
  }
}

std::vector<std::uint32_t> MessageCode::decode(std::span<const int> outputs) const {
  if (static_cast<int>(outputs.size()) != block_length_) {
    throw ArgumentError("output block length does not match the code");
  }
  std::vector<std::uint32_t> decoded(segments_.size(), 0);
  std::size_t offset = 0;
  for (std::size_t s = 0; s < segments_.size(); ++s) {
    const std::size_t len = static_cast<std::size_t>(segment_lengths_[s]);
    decoded[s] = static_cast<std::uint32_t>(segments_[s].decode(outputs.subspan(offset, len)));
    offset += len;
  }
  return decoded;
}

std::vector<MessageCode> build_message_codes(const SchemeParams& params,
                                             const CompoundFamily& family, RngSeed seed) {
  std::vector<MessageCode> codes;
  codes.reserve(family.size());
  for (int ell = 0; ell < family.size(); ++ell) {
    codes.push_back(MessageCode::build(
        family.channel(ell), params.codebook_inputs[ell], params.message_bits[ell],
        params.beta_m_len[ell], params.max_segment_bits, seed,
        stream_id(1, static_cast<std::uint64_t>(ell))));
  }
  return codes;
}

CompoundMessage sample_compound_message(const std::vector<MessageCode>& codes,
                                        std::mt19937_64& rng) {
  CompoundMessage message(codes.size());
  for (std::size_t ell = 0; ell < codes.size(); ++ell) {
    message[ell] = codes[ell].sample_message(rng);
  }
  return message;
}

EpochRecord run_epoch(const SchemeParams& params, const CompoundFamily& family,
                      const std::vector<MessageCode>& codes, int realized,
                      const CompoundMessage& message, std::mt19937_64& rng,
                      const EpochHooks& hooks) {
  if (realized < 0 || realized >= family.size()) {
    throw ArgumentError("realized channel index outside the family");
  }
  const Dmc& truth = family.channel(realized);
  EpochRecord record;
  std::vector<int> sent, received;

  const TrainingSequence train_m =
      make_training_sequence(params.message_training, params.alpha_m_len, family.num_inputs());
  sample_block_into(truth, train_m.symbols, rng, received);
  record.estimate_message =
      estimate_channel(family, params.message_rule, train_m.symbols, received);

  const MessageCode& code = codes[record.estimate_message];
  record.message_sent = message[record.estimate_message];
  code.encode_into(record.message_sent, sent);
  sample_block_into(truth, sent, rng, received);
  record.message_decoded = code.decode(received);

  const TrainingSequence train_c =
      make_training_sequence(params.control_training, params.alpha_c_len, family.num_inputs());
  sample_block_into(truth, train_c.symbols, rng, received);
  record.estimate_control =
      estimate_channel(family, params.control_rule, train_c.symbols, received);

  const bool matched =
      !hooks.force_message_mismatch && record.message_decoded == record.message_sent;
  record.sent_accept = matched;
  const ControlTest& test = params.control_tests[record.estimate_control];
  sent.assign(static_cast<std::size_t>(params.beta_c_len[record.estimate_control]),
              matched ? test.accept_symbol : test.reject_symbol);
  sample_block_into(truth, sent, rng, received);
  record.decision = control_decide(test, family.channel(record.estimate_control), received);

  record.length = params.epoch_length(record.estimate_message, record.estimate_control);
  return record;
}

SessionTranscript run_session(const SchemeParams& params, const CompoundFamily& family,
                              const std::vector<MessageCode>& codes, int realized,
                              std::mt19937_64& rng) {
  const CompoundMessage message = sample_compound_message(codes, rng);
  SessionTranscript transcript;
  long tau = 0;
  for (int k = 1; k <= params.epoch_cap; ++k) {
    transcript.epochs.push_back(run_epoch(params, family, codes, realized, message, rng));
    const EpochRecord& record = transcript.epochs.back();
    tau += record.length;
    if (record.decision == ControlDecision::Accept) {
      transcript.stopping_epoch = k;
      transcript.total_uses = tau;
      transcript.final_estimate = record.estimate_message;
      transcript.final_message = record.message_decoded;
      transcript.error = record.message_decoded != message[record.estimate_message];
      return transcript;
    }
  }
  std::ostringstream msg;
  msg << "control test never accepted within " << params.epoch_cap << " epochs";
  throw RunawayError(msg.str());
}

SessionStatistics session_statistics(std::span<const SessionTranscript> transcripts,
                                     std::span<const int> message_bits) {
  if (transcripts.empty()) throw ArgumentError("statistics need at least one transcript");
  SessionStatistics stats;
  stats.sessions = static_cast<long>(transcripts.size());
  long errors = 0, first_accepts = 0;
  double tau_sum = 0.0, k_sum = 0.0, bits_sum = 0.0;
  for (const SessionTranscript& t : transcripts) {
    errors += t.error ? 1 : 0;
    first_accepts += t.stopping_epoch == 1 ? 1 : 0;
    tau_sum += static_cast<double>(t.total_uses);
    k_sum += static_cast<double>(t.stopping_epoch);
    if (t.final_estimate < 0 || t.final_estimate >= static_cast<int>(message_bits.size())) {
      throw ArgumentError("transcript estimate outside the family");
    }
    bits_sum += static_cast<double>(message_bits[t.final_estimate]);
  }
  const double n = static_cast<double>(stats.sessions);
  stats.error_rate = static_cast<double>(errors) / n;
  stats.mean_tau = tau_sum / n;
  stats.mean_k = k_sum / n;
  stats.mean_payload_bits = bits_sum / n;
  stats.rate_estimate = stats.mean_payload_bits / stats.mean_tau;
  stats.rho_first_epoch = static_cast<double>(first_accepts) / n;
  stats.rho_pooled = n / k_sum;
  stats.empirical_exponent =
      stats.error_rate > 0.0 ? -std::log2(stats.error_rate) / stats.mean_tau : kInf;
  return stats;
}

}  // namespace compound
