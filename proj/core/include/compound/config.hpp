#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "compound/channel.hpp"
#include "compound/detection.hpp"
#include "compound/scheme.hpp"

namespace compound {

// Experiment configuration: a single JSON document with dotted-path
// overrides. Parsing is strict (unknown keys are errors) and the parsed
// struct serializes back to a canonical document, so parse -> serialize ->
// parse is the identity.

using Json = nlohmann::ordered_json;

struct FamilyConfig {
  // Exactly one of the two is set: a symmetric crossover pair, or explicit
  // row-stochastic matrices.
  double bsc_pair = -1.0;  // negative = unset
  std::vector<std::vector<std::vector<double>>> channels;

  bool operator==(const FamilyConfig&) const = default;
};

struct RatesConfig {
  // "fractions_of_capacity" scales each member capacity; "absolute" is
  // bits per use. A single value broadcasts across the family.
  std::string mode = "fractions_of_capacity";
  std::vector<double> values = {0.25};

  bool operator==(const RatesConfig&) const = default;
};

struct EstimatorConfig {
  std::string kind = "bsc_threshold";  // or "ml"
  double threshold = 0.5;

  bool operator==(const EstimatorConfig&) const = default;
};

struct AlphaConfig {
  std::string kind = "log_ratio";  // or "power"
  double exponent = 0.5;

  bool operator==(const AlphaConfig&) const = default;
};

struct SchemeConfig {
  int reference_index = 1;  // 1-based member index
  AlphaConfig alpha_m;
  double margin_coefficient = 6.0;
  double kappa_max = 10.0;
  double slack_exponent = 0.25;
  int max_segment_bits = 13;
  int epoch_cap = 10000;

  bool operator==(const SchemeConfig&) const = default;
};

struct SimulateConfig {
  std::vector<int> n_schedule = {256};
  long long sessions = 1000;
  std::vector<int> realized;  // 1-based member indices; empty = all
  std::uint64_t seed = 1;
  int jobs = 1;
  int chunk = 256;
  std::string csv;          // empty = stdout
  std::string transcripts;  // empty = no per-session dump

  bool operator==(const SimulateConfig&) const = default;
};

struct OracleConfig {
  // Explicit tiny phase lengths; the derivation rules would not produce an
  // enumerable epoch at any n.
  int n = 16;
  int alpha_m_len = 2;
  std::vector<int> beta_m_len = {4, 4};
  int alpha_c_len = 2;
  std::vector<int> beta_c_len = {4, 4};
  std::vector<int> message_bits = {1, 1};
  long long sessions = 1000000;
  std::vector<int> realized;  // 1-based; empty = all
  std::uint64_t seed = 1;
  int jobs = 1;
  int chunk = 4096;

  bool operator==(const OracleConfig&) const = default;
};

struct ExperimentConfig {
  FamilyConfig family;
  RatesConfig rates;
  EstimatorConfig message_estimator;
  EstimatorConfig control_estimator;
  SchemeConfig scheme;
  SimulateConfig simulate;
  OracleConfig oracle;

  bool operator==(const ExperimentConfig&) const = default;
};

// Strict parse of a configuration document. Unknown keys, wrong types, and
// malformed values raise ConfigError naming the offending path.
ExperimentConfig parse_config(const Json& document);

ExperimentConfig load_config_file(const std::string& path);

Json config_to_json(const ExperimentConfig& config);

// Applies one `dotted.path=value` override to a raw document before parsing.
// The value is parsed as JSON when possible and kept as a string otherwise.
void apply_override(Json& document, const std::string& assignment);

// Replaces both seeds from the COMPOUND_SIM_SEED environment variable when
// it is set. Returns true when an override happened.
bool apply_seed_environment(ExperimentConfig& config);

// Semantic validation: family well formed, rates feasible against member
// capacities, schedules increasing, session counts positive. Throws
// ConfigError with the failing field.
void validate_config(const ExperimentConfig& config);

// Construction helpers for the validated configuration.
CompoundFamily family_from_config(const ExperimentConfig& config);
std::vector<double> absolute_rates(const ExperimentConfig& config, const CompoundFamily& family);
EstimationRule rule_from_config(const EstimatorConfig& estimator);
DeriveOptions derive_options_from_config(const ExperimentConfig& config);
std::vector<int> realized_indices(std::span<const int> one_based, int family_size);

}  // namespace compound
