#pragma once

#include <span>
#include <vector>

#include "compound/channel.hpp"

namespace compound {

// Channel estimation from training observations, the control-phase binary
// hypothesis test, and the exponent regions that price estimation errors.

enum class TrainingKind { RoundRobin, AllZero };

struct TrainingSequence {
  std::vector<int> symbols;
};

// RoundRobin cycles through the input alphabet; AllZero repeats symbol 0.
TrainingSequence make_training_sequence(TrainingKind kind, int length, int num_inputs);

// Per-input-symbol usage fractions of a training sequence.
std::vector<double> training_composition(std::span<const int> symbols, int num_inputs);

enum class EstimatorKind { MaximumLikelihood, BscThreshold };

struct EstimationRule {
  EstimatorKind kind = EstimatorKind::MaximumLikelihood;
  // BscThreshold only: decide the low-crossover member iff the fraction of
  // ones in the output block is below this value.
  double threshold = 0.5;

  static EstimationRule maximum_likelihood();
  static EstimationRule bsc_threshold(double q);
};

// Returns the 0-based index of the decided family member.
// MaximumLikelihood maximizes the output log-likelihood given the training
// inputs; exact ties go to the smallest index. BscThreshold requires the
// family to be exactly {BSC(p), BSC(1-p)} with p < threshold < 1-p.
int estimate_channel(const CompoundFamily& family, const EstimationRule& rule,
                     std::span<const int> training, std::span<const int> outputs);

struct ExponentTuple {
  // pairwise[l][k]: exponent of deciding k when l is true; diagonal unused.
  std::vector<std::vector<double>> pairwise;
  // marginal[l] = min over k != l of pairwise[l][k].
  std::vector<double> marginal;
};

// Exponents of the estimation error as the training length grows, for the
// given per-symbol training composition. The threshold rule is priced by the
// binary divergences of the threshold against each crossover and requires
// all-zero training (composition concentrated on symbol 0); the likelihood
// rule is priced by composition-weighted Chernoff information between the
// members' conditional output laws.
ExponentTuple estimation_exponents(const CompoundFamily& family, const EstimationRule& rule,
                                   std::span<const double> composition);

std::vector<double> marginal_from_pairwise(const std::vector<std::vector<double>>& pairwise);

std::vector<std::vector<double>> marginal_region_from_pairwise(
    const std::vector<std::vector<std::vector<double>>>& pairwise_tuples);

struct ControlTest {
  int accept_symbol = 0;
  int reject_symbol = 1;
  // Slack schedule delta(m) = m^(-slack_exponent); any exponent in (0, 1)
  // vanishes while m * delta(m) still grows.
  double slack_exponent = 0.25;

  double slack(int observations) const;
};

// Picks the maximally separated ordered input pair of the channel.
ControlTest make_control_test(const Dmc& channel);

enum class ControlDecision { Accept, Reject };

// One-sided likelihood-ratio test: ACCEPT iff the per-observation log2
// likelihood ratio of accept_symbol against reject_symbol reaches the
// divergence between the two conditional laws minus the slack. Outputs that
// are impossible under the accept law force REJECT; outputs impossible under
// the reject law alone force ACCEPT.
ControlDecision control_decide(const ControlTest& test, const Dmc& channel,
                               std::span<const int> outputs);

// Worst-case slack of the candidate exponent tuple over the output simplex:
// min over output laws p of max_k min_{l != k} (D(p || law_l) - pairwise[l][k]).
// Nonnegative values certify that every output law is covered by some
// hypothesis; the tuple is achievable iff this is >= 0 (up to grid error).
double tuncel_margin(const std::vector<std::vector<double>>& pairwise,
                     const std::vector<std::vector<double>>& output_laws, int grid_resolution);

// Membership in the achievable pairwise-exponent region: true iff for every
// output law p some hypothesis k has D(p || law_l) >= pairwise[l][k] for all
// l != k. Evaluated on a simplex grid of the given resolution (points per
// dimension, >= 10) plus a local refinement around the worst grid point.
bool tuncel_member(const std::vector<std::vector<double>>& pairwise,
                   const std::vector<std::vector<double>>& output_laws, int grid_resolution);

}  // namespace compound
