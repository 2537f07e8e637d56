#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "compound/channel.hpp"
#include "compound/detection.hpp"
#include "compound/infotheory.hpp"
#include "compound/random.hpp"

namespace compound {

// Four-phase variable-rate variable-length coding: train, message, retrain,
// control, repeated over epochs until the control test accepts.

// Training-phase length schedule: LogRatio uses floor(n / log2 n), Power
// uses floor(n^exponent) with exponent in (0,1). Both vanish as a fraction
// of n while the absolute length still diverges.
struct AlphaSchedule {
  enum class Kind { LogRatio, Power };
  Kind kind = Kind::LogRatio;
  double exponent = 0.5;

  int length_at(int n) const;
};

struct DeriveOptions {
  AlphaSchedule alpha_m;
  // Extra message-phase symbols beyond the asymptotic share, scaled by the
  // square root of the payload share; keeps the finite-n codebook rate
  // comfortably below capacity without disturbing the limits.
  double margin_coefficient = 6.0;
  // Finite surrogate for the control-to-exponent ratio when the control
  // symbols have disjoint supports.
  double kappa_max = 10.0;
  double slack_exponent = 0.25;
  int epoch_cap = 10000;
  int max_segment_bits = 13;
  // Training kind when the estimator is likelihood-based; threshold
  // estimators always train with the all-zero sequence.
  TrainingKind ml_training = TrainingKind::RoundRobin;
};

struct SchemeParams {
  int n = 0;
  int reference_index = 0;  // 0-based
  std::vector<double> rates;
  std::vector<double> capacities;
  std::vector<double> burnashev;
  std::vector<double> kappa;
  std::vector<double> gamma;
  std::vector<double> zeta;
  std::vector<double> xi;
  int alpha_m_len = 0;
  int alpha_c_len = 0;
  std::vector<int> beta_m_len;
  std::vector<int> beta_c_len;
  std::vector<int> message_bits;  // log2 of each message-set size
  EstimationRule message_rule;
  EstimationRule control_rule;
  TrainingKind message_training = TrainingKind::RoundRobin;
  TrainingKind control_training = TrainingKind::RoundRobin;
  std::vector<ControlTest> control_tests;
  std::vector<std::vector<double>> codebook_inputs;  // per-member input law
  int max_segment_bits = 13;
  int epoch_cap = 10000;

  double alpha_m() const { return static_cast<double>(alpha_m_len) / n; }
  double alpha_c() const { return static_cast<double>(alpha_c_len) / n; }
  double beta_m(int ell) const { return static_cast<double>(beta_m_len[ell]) / n; }
  double beta_c(int ell) const { return static_cast<double>(beta_c_len[ell]) / n; }
  // Total symbols of one epoch given the two estimates made inside it.
  long epoch_length(int estimate_message, int estimate_control) const;
};

// Derives all per-member constants and integer phase lengths at scale n.
// control_exponents prices the retrain estimator (its marginal exponents);
// rates must satisfy 0 <= R < C, and every member needs a nondegenerate
// control pair (positive divergence between some two rows).
SchemeParams derive_params(const CompoundFamily& family, std::span<const double> rates,
                           std::span<const double> control_exponents,
                           const EstimationRule& message_rule, const EstimationRule& control_rule,
                           int n, int reference_index, const DeriveOptions& options = {});

// Random codebook with an exact maximum-likelihood decoder for the channel
// it was built for. Codewords are i.i.d. from the given input law; a draw
// that collides with an earlier codeword is rejected and redrawn, so books
// are distinct whenever the positive-mass sequences can seat every message.
class Codebook {
 public:
  static Codebook build(const Dmc& channel, std::span<const double> input_law, int num_messages,
                        int block_length, std::mt19937_64& rng);

  int num_messages() const { return num_messages_; }
  int block_length() const { return block_length_; }
  std::span<const int> codeword(int message) const;
  // Index of the likeliest codeword for these outputs; ties go to the
  // smallest index.
  int decode(std::span<const int> outputs) const;

 private:
  int num_messages_ = 0;
  int block_length_ = 0;
  std::vector<int> symbols_;               // row-major M x length
  std::vector<std::vector<double>> loglik_;  // [input][output], log2
  bool packed_ = false;                    // binary fast path
  bool prefer_far_ = false;                // crossover above one half
  int words_per_codeword_ = 0;
  std::vector<std::uint64_t> packed_words_;
};

// Validating construction wrapper: draws from the capacity-achieving input
// law and requires rate < capacity.
Codebook build_codebook(const Dmc& channel, double rate, int block_length, std::mt19937_64& rng);

// Message encoder over one phase block: the payload is split into segments
// of at most max_segment_bits bits, each carried by its own codebook slice
// with exact per-slice likelihood decoding. Messages are held as one index
// per segment.
class MessageCode {
 public:
  // Builds the per-segment codebooks; segment s draws its engine from
  // stream_id(stream_base, s) so construction is deterministic per seed.
  static MessageCode build(const Dmc& channel, std::span<const double> input_law, int total_bits,
                           int block_length, int max_segment_bits, RngSeed seed,
                           std::uint64_t stream_base);

  int total_bits() const { return total_bits_; }
  int block_length() const { return block_length_; }
  int num_segments() const { return static_cast<int>(segments_.size()); }
  std::span<const int> segment_bits() const { return segment_bits_; }

  std::vector<std::uint32_t> sample_message(std::mt19937_64& rng) const;
  void encode_into(std::span<const std::uint32_t> message, std::vector<int>& out) const;
  std::vector<std::uint32_t> decode(std::span<const int> outputs) const;

 private:
  int total_bits_ = 0;
  int block_length_ = 0;
  std::vector<Codebook> segments_;
  std::vector<int> segment_bits_;
  std::vector<int> segment_lengths_;
};

// One codebook per family member, sized by the derived parameters.
std::vector<MessageCode> build_message_codes(const SchemeParams& params,
                                             const CompoundFamily& family, RngSeed seed);

using CompoundMessage = std::vector<std::vector<std::uint32_t>>;

CompoundMessage sample_compound_message(const std::vector<MessageCode>& codes,
                                        std::mt19937_64& rng);

struct EpochHooks {
  // Forces the transmitter to behave as if the message decode failed, so the
  // control phase sends the reject sequence.
  bool force_message_mismatch = false;
};

struct EpochRecord {
  int estimate_message = 0;  // decided during the first training phase
  std::vector<std::uint32_t> message_sent;
  std::vector<std::uint32_t> message_decoded;
  int estimate_control = 0;  // decided during the retrain phase
  bool sent_accept = false;
  ControlDecision decision = ControlDecision::Reject;
  long length = 0;
};

EpochRecord run_epoch(const SchemeParams& params, const CompoundFamily& family,
                      const std::vector<MessageCode>& codes, int realized,
                      const CompoundMessage& message, std::mt19937_64& rng,
                      const EpochHooks& hooks = {});

struct SessionTranscript {
  std::vector<EpochRecord> epochs;
  int stopping_epoch = 0;  // first epoch whose control decision accepted
  long total_uses = 0;
  int final_estimate = 0;
  std::vector<std::uint32_t> final_message;
  bool error = false;
};

// Runs epochs with a fresh uniform compound message until the control test
// accepts. Exceeding params.epoch_cap raises the runaway error.
SessionTranscript run_session(const SchemeParams& params, const CompoundFamily& family,
                              const std::vector<MessageCode>& codes, int realized,
                              std::mt19937_64& rng);

struct SessionStatistics {
  long sessions = 0;
  double error_rate = 0.0;
  double mean_tau = 0.0;
  double mean_k = 0.0;
  double mean_payload_bits = 0.0;
  // Payload bits over duration, both averaged across sessions first.
  double rate_estimate = 0.0;
  // Fraction of sessions whose first epoch accepted.
  double rho_first_epoch = 0.0;
  // Sessions over total observed epochs (the stopping-time view).
  double rho_pooled = 0.0;
  // -log2(error_rate) / mean_tau; infinite when no errors were observed.
  double empirical_exponent = 0.0;
};

SessionStatistics session_statistics(std::span<const SessionTranscript> transcripts,
                                     std::span<const int> message_bits);

}  // namespace compound
