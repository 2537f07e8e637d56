#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "compound/analysis.hpp"
#include "compound/config.hpp"
#include "compound/scheme.hpp"

namespace compound {

// Sweep orchestration: deterministic parallel Monte Carlo over (n, member)
// cells with order-independent aggregation. Every session derives its engine
// from (seed, cell, session index) alone, so the results are identical for
// any jobs/chunk partition.

// Mergeable sufficient statistics of a batch of sessions. All sums are
// integer-valued, so aggregation is exact and independent of merge order.
struct CellStats {
  long long sessions = 0;
  long long errors = 0;
  long long first_accepts = 0;
  long long sum_k = 0;
  long long sum_tau = 0;
  long long sum_tau_sq = 0;
  long long sum_payload_bits = 0;
  // First-epoch lengths are the unbiased per-epoch sample: later epochs are
  // conditioned on earlier rejects, and length and decision are dependent.
  long long sum_first_len = 0;
  long long sum_first_len_sq = 0;
  std::vector<long long> k_counts;  // k_counts[k-1] = sessions stopping at epoch k

  void absorb(const SessionTranscript& transcript, std::span<const int> message_bits);
  void merge(const CellStats& other);
};

// Same derivations as session_statistics, evaluated from the folded sums.
SessionStatistics statistics_from(const CellStats& stats);

struct SweepCell {
  int n = 0;
  int realized = 0;  // 0-based member index
  CellStats stats;
  SessionStatistics derived;
  double lower_bound = 0.0;
  double upper_bound = 0.0;
};

struct SweepResult {
  std::vector<SweepCell> cells;  // n-major, then realized order
  std::vector<std::string> transcript_lines;
};

SweepResult run_sweep(const ExperimentConfig& config);

// Pinned column contract:
// n,ell,sessions,P_hat,R_hat,tau_mean,tau_over_n,K_mean,rho_hat,emp_exponent,
// lower_bound,upper_bound. ell is 1-based. rho_hat is the pooled estimate
// sessions / total epochs.
void write_sweep_csv(const SweepResult& result, std::ostream& out);

// Decimal formatting used in every emitted file: finite numbers in shortest
// %.12g form, infinities as the literal "inf"/"-inf". NaN is a defect and
// throws.
std::string format_number(double value);

struct OracleCheckCell {
  int realized = 0;  // 0-based
  EpochOracle oracle;
  CellStats stats;
  SessionStatistics mc;
  double mc_mean_first_epoch_length = 0.0;
  double z_error = 0.0;
  double z_rho = 0.0;
  double z_lambda = 0.0;
  double z_tau = 0.0;
  bool pass = false;
};

struct OracleCheckReport {
  std::vector<OracleCheckCell> cells;
  bool pass = false;
};

// Exact enumeration against Monte Carlo at the explicit tiny parameters of
// config.oracle: z-scores for the session error rate, the first-epoch accept
// rate, the mean epoch length, and the mean stopping time. Passes iff every
// |z| <= 4.
OracleCheckReport run_oracle_check(const ExperimentConfig& config);

// The explicit tiny-parameter scheme used by the oracle check.
SchemeParams oracle_params(const ExperimentConfig& config, const CompoundFamily& family);

// Marginal exponents of the retrain estimator under its ideal training
// composition (all-zero for threshold rules, uniform for likelihood rules).
std::vector<double> control_phase_exponents(const CompoundFamily& family,
                                            const EstimationRule& control_rule,
                                            const DeriveOptions& options);

}  // namespace compound
