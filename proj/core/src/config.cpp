#include "compound/config.hpp"

#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "compound/errors.hpp"
#include "compound/infotheory.hpp"

namespace compound {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

void expect_object(const Json& j, const std::string& path) {
  if (!j.is_object()) {
    fail(path, "expected an object");
  }
}

// Strict key check: typos and stale keys are configuration errors, not
// silent no-ops.
void check_keys(const Json& j, const std::string& path, std::initializer_list<const char*> keys) {
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* key : keys) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) {
      fail(path.empty() ? item.key() : path + "." + item.key(), "unknown key");
    }
  }
}

double get_double(const Json& j, const std::string& path) {
  if (!j.is_number()) {
    fail(path, "expected a number");
  }
  return j.get<double>();
}

long long get_integer(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) {
    fail(path, "expected an integer");
  }
  return j.get<long long>();
}

int get_int(const Json& j, const std::string& path) {
  const long long value = get_integer(j, path);
  if (value < std::numeric_limits<int>::min() || value > std::numeric_limits<int>::max()) {
    fail(path, "integer out of range");
  }
  return static_cast<int>(value);
}

std::string get_string(const Json& j, const std::string& path) {
  if (!j.is_string()) {
    fail(path, "expected a string");
  }
  return j.get<std::string>();
}

std::vector<double> get_double_list(const Json& j, const std::string& path) {
  if (!j.is_array()) {
    fail(path, "expected an array of numbers");
  }
  std::vector<double> values;
  values.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    values.push_back(get_double(j[i], path + "[" + std::to_string(i) + "]"));
  }
  return values;
}

std::vector<int> get_int_list(const Json& j, const std::string& path) {
  if (!j.is_array()) {
    fail(path, "expected an array of integers");
  }
  std::vector<int> values;
  values.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    values.push_back(get_int(j[i], path + "[" + std::to_string(i) + "]"));
  }
  return values;
}

FamilyConfig parse_family(const Json& j) {
  expect_object(j, "family");
  check_keys(j, "family", {"bsc_pair", "channels"});
  FamilyConfig family;
  const bool has_pair = j.contains("bsc_pair");
  const bool has_channels = j.contains("channels");
  if (has_pair == has_channels) {
    fail("family", "set exactly one of bsc_pair or channels");
  }
  if (has_pair) {
    family.bsc_pair = get_double(j["bsc_pair"], "family.bsc_pair");
    if (!(family.bsc_pair > 0.0) || !(family.bsc_pair < 0.5)) {
      fail("family.bsc_pair", "crossover must lie in (0, 1/2)");
    }
  } else {
    const Json& arr = j["channels"];
    if (!arr.is_array() || arr.empty()) {
      fail("family.channels", "expected a nonempty array of matrices");
    }
    for (std::size_t c = 0; c < arr.size(); ++c) {
      const std::string base = "family.channels[" + std::to_string(c) + "]";
      if (!arr[c].is_array() || arr[c].empty()) {
        fail(base, "expected a nonempty array of rows");
      }
      std::vector<std::vector<double>> rows;
      for (std::size_t r = 0; r < arr[c].size(); ++r) {
        rows.push_back(get_double_list(arr[c][r], base + "[" + std::to_string(r) + "]"));
      }
      family.channels.push_back(std::move(rows));
    }
  }
  return family;
}

RatesConfig parse_rates(const Json& j) {
  expect_object(j, "rates");
  check_keys(j, "rates", {"mode", "values"});
  RatesConfig rates;
  if (j.contains("mode")) {
    rates.mode = get_string(j["mode"], "rates.mode");
    if (rates.mode != "fractions_of_capacity" && rates.mode != "absolute") {
      fail("rates.mode", "expected fractions_of_capacity or absolute");
    }
  }
  if (j.contains("values")) {
    rates.values = get_double_list(j["values"], "rates.values");
    if (rates.values.empty()) {
      fail("rates.values", "expected at least one value");
    }
  }
  return rates;
}

EstimatorConfig parse_estimator(const Json& j, const std::string& path) {
  expect_object(j, path);
  check_keys(j, path, {"kind", "threshold"});
  EstimatorConfig estimator;
  if (j.contains("kind")) {
    estimator.kind = get_string(j["kind"], path + ".kind");
    if (estimator.kind != "bsc_threshold" && estimator.kind != "ml") {
      fail(path + ".kind", "expected bsc_threshold or ml");
    }
  }
  if (j.contains("threshold")) {
    estimator.threshold = get_double(j["threshold"], path + ".threshold");
  }
  return estimator;
}

SchemeConfig parse_scheme(const Json& j) {
  expect_object(j, "scheme");
  check_keys(j, "scheme",
             {"reference_index", "alpha_m", "margin_coefficient", "kappa_max", "slack_exponent",
              "max_segment_bits", "epoch_cap"});
  SchemeConfig scheme;
  if (j.contains("reference_index")) {
    scheme.reference_index = get_int(j["reference_index"], "scheme.reference_index");
  }
  if (j.contains("alpha_m")) {
    const Json& a = j["alpha_m"];
    expect_object(a, "scheme.alpha_m");
    check_keys(a, "scheme.alpha_m", {"kind", "exponent"});
    if (a.contains("kind")) {
      scheme.alpha_m.kind = get_string(a["kind"], "scheme.alpha_m.kind");
      if (scheme.alpha_m.kind != "log_ratio" && scheme.alpha_m.kind != "power") {
        fail("scheme.alpha_m.kind", "expected log_ratio or power");
      }
    }
    if (a.contains("exponent")) {
      scheme.alpha_m.exponent = get_double(a["exponent"], "scheme.alpha_m.exponent");
    }
  }
  if (j.contains("margin_coefficient")) {
    scheme.margin_coefficient = get_double(j["margin_coefficient"], "scheme.margin_coefficient");
  }
  if (j.contains("kappa_max")) {
    scheme.kappa_max = get_double(j["kappa_max"], "scheme.kappa_max");
  }
  if (j.contains("slack_exponent")) {
    scheme.slack_exponent = get_double(j["slack_exponent"], "scheme.slack_exponent");
  }
  if (j.contains("max_segment_bits")) {
    scheme.max_segment_bits = get_int(j["max_segment_bits"], "scheme.max_segment_bits");
  }
  if (j.contains("epoch_cap")) {
    scheme.epoch_cap = get_int(j["epoch_cap"], "scheme.epoch_cap");
  }
  return scheme;
}

std::uint64_t get_seed(const Json& j, const std::string& path) {
  if (!j.is_number_integer() && !j.is_number_unsigned()) {
    fail(path, "expected an integer seed");
  }
  if (j.is_number_unsigned()) {
    return j.get<std::uint64_t>();
  }
  const long long value = j.get<long long>();
  if (value < 0) {
    fail(path, "seed must be nonnegative");
  }
  return static_cast<std::uint64_t>(value);
}

SimulateConfig parse_simulate(const Json& j) {
  expect_object(j, "simulate");
  check_keys(j, "simulate",
             {"n_schedule", "sessions", "realized", "seed", "jobs", "chunk", "csv", "transcripts"});
  SimulateConfig sim;
  if (j.contains("n_schedule")) {
    sim.n_schedule = get_int_list(j["n_schedule"], "simulate.n_schedule");
  }
  if (j.contains("sessions")) {
    sim.sessions = get_integer(j["sessions"], "simulate.sessions");
  }
  if (j.contains("realized")) {
    sim.realized = get_int_list(j["realized"], "simulate.realized");
  }
  if (j.contains("seed")) {
    sim.seed = get_seed(j["seed"], "simulate.seed");
  }
  if (j.contains("jobs")) {
    sim.jobs = get_int(j["jobs"], "simulate.jobs");
  }
  if (j.contains("chunk")) {
    sim.chunk = get_int(j["chunk"], "simulate.chunk");
  }
  if (j.contains("csv")) {
    sim.csv = get_string(j["csv"], "simulate.csv");
  }
  if (j.contains("transcripts")) {
    sim.transcripts = get_string(j["transcripts"], "simulate.transcripts");
  }
  return sim;
}

OracleConfig parse_oracle(const Json& j) {
  expect_object(j, "oracle");
  check_keys(j, "oracle",
             {"n", "alpha_m_len", "beta_m_len", "alpha_c_len", "beta_c_len", "message_bits",
              "sessions", "realized", "seed", "jobs", "chunk"});
  OracleConfig oracle;
  if (j.contains("n")) {
    oracle.n = get_int(j["n"], "oracle.n");
  }
  if (j.contains("alpha_m_len")) {
    oracle.alpha_m_len = get_int(j["alpha_m_len"], "oracle.alpha_m_len");
  }
  if (j.contains("beta_m_len")) {
    oracle.beta_m_len = get_int_list(j["beta_m_len"], "oracle.beta_m_len");
  }
  if (j.contains("alpha_c_len")) {
    oracle.alpha_c_len = get_int(j["alpha_c_len"], "oracle.alpha_c_len");
  }
  if (j.contains("beta_c_len")) {
    oracle.beta_c_len = get_int_list(j["beta_c_len"], "oracle.beta_c_len");
  }
  if (j.contains("message_bits")) {
    oracle.message_bits = get_int_list(j["message_bits"], "oracle.message_bits");
  }
  if (j.contains("sessions")) {
    oracle.sessions = get_integer(j["sessions"], "oracle.sessions");
  }
  if (j.contains("realized")) {
    oracle.realized = get_int_list(j["realized"], "oracle.realized");
  }
  if (j.contains("seed")) {
    oracle.seed = get_seed(j["seed"], "oracle.seed");
  }
  if (j.contains("jobs")) {
    oracle.jobs = get_int(j["jobs"], "oracle.jobs");
  }
  if (j.contains("chunk")) {
    oracle.chunk = get_int(j["chunk"], "oracle.chunk");
  }
  return oracle;
}

}  // namespace

ExperimentConfig parse_config(const Json& document) {
  expect_object(document, "config");
  check_keys(document, "",
             {"family", "rates", "estimators", "scheme", "simulate", "oracle"});
  if (!document.contains("family")) {
    fail("family", "missing required section");
  }
  ExperimentConfig config;
  config.family = parse_family(document["family"]);
  if (document.contains("rates")) {
    config.rates = parse_rates(document["rates"]);
  }
  if (document.contains("estimators")) {
    const Json& est = document["estimators"];
    expect_object(est, "estimators");
    check_keys(est, "estimators", {"message", "control"});
    if (est.contains("message")) {
      config.message_estimator = parse_estimator(est["message"], "estimators.message");
    }
    if (est.contains("control")) {
      config.control_estimator = parse_estimator(est["control"], "estimators.control");
    }
  }
  if (document.contains("scheme")) {
    config.scheme = parse_scheme(document["scheme"]);
  }
  if (document.contains("simulate")) {
    config.simulate = parse_simulate(document["simulate"]);
  }
  if (document.contains("oracle")) {
    config.oracle = parse_oracle(document["oracle"]);
  }
  return config;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file: " + path);
  }
  Json document;
  try {
    document = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(document);
}

Json config_to_json(const ExperimentConfig& config) {
  Json j = Json::object();
  Json family = Json::object();
  if (config.family.bsc_pair >= 0.0) {
    family["bsc_pair"] = config.family.bsc_pair;
  } else {
    family["channels"] = config.family.channels;
  }
  j["family"] = std::move(family);
  j["rates"] = {{"mode", config.rates.mode}, {"values", config.rates.values}};
  j["estimators"] = {
      {"message",
       {{"kind", config.message_estimator.kind}, {"threshold", config.message_estimator.threshold}}},
      {"control",
       {{"kind", config.control_estimator.kind}, {"threshold", config.control_estimator.threshold}}}};
  j["scheme"] = {{"reference_index", config.scheme.reference_index},
                 {"alpha_m",
                  {{"kind", config.scheme.alpha_m.kind}, {"exponent", config.scheme.alpha_m.exponent}}},
                 {"margin_coefficient", config.scheme.margin_coefficient},
                 {"kappa_max", config.scheme.kappa_max},
                 {"slack_exponent", config.scheme.slack_exponent},
                 {"max_segment_bits", config.scheme.max_segment_bits},
                 {"epoch_cap", config.scheme.epoch_cap}};
  j["simulate"] = {{"n_schedule", config.simulate.n_schedule},
                   {"sessions", config.simulate.sessions},
                   {"realized", config.simulate.realized},
                   {"seed", config.simulate.seed},
                   {"jobs", config.simulate.jobs},
                   {"chunk", config.simulate.chunk},
                   {"csv", config.simulate.csv},
                   {"transcripts", config.simulate.transcripts}};
  j["oracle"] = {{"n", config.oracle.n},
                 {"alpha_m_len", config.oracle.alpha_m_len},
                 {"beta_m_len", config.oracle.beta_m_len},
                 {"alpha_c_len", config.oracle.alpha_c_len},
                 {"beta_c_len", config.oracle.beta_c_len},
                 {"message_bits", config.oracle.message_bits},
                 {"sessions", config.oracle.sessions},
                 {"realized", config.oracle.realized},
                 {"seed", config.oracle.seed},
                 {"jobs", config.oracle.jobs},
                 {"chunk", config.oracle.chunk}};
  return j;
}

void apply_override(Json& document, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override must look like path.to.key=value: " + assignment);
  }
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);

  Json* node = &document;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
    if (key.empty()) {
      throw ConfigError("override path has an empty segment: " + path);
    }
    if (!node->is_object() && !node->is_null()) {
      throw ConfigError("override path crosses a non-object value: " + path);
    }
    if (dot == std::string::npos) {
      Json value = Json::parse(text, nullptr, false);
      if (value.is_discarded()) {
        value = text;  // plain strings may be given unquoted
      }
      (*node)[key] = std::move(value);
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

bool apply_seed_environment(ExperimentConfig& config) {
  const char* text = std::getenv("COMPOUND_SIM_SEED");
  if (text == nullptr || *text == '\0') {
    return false;
  }
  char* end = nullptr;
  const unsigned long long seed = std::strtoull(text, &end, 10);
  if (end == text || *end != '\0') {
    throw ConfigError("COMPOUND_SIM_SEED must be a nonnegative integer");
  }
  config.simulate.seed = seed;
  config.oracle.seed = seed;
  return true;
}

CompoundFamily family_from_config(const ExperimentConfig& config) {
  if (config.family.bsc_pair >= 0.0) {
    const double p = config.family.bsc_pair;
    return CompoundFamily({bsc(p), bsc(1.0 - p)});
  }
  std::vector<Dmc> members;
  members.reserve(config.family.channels.size());
  for (std::size_t c = 0; c < config.family.channels.size(); ++c) {
    try {
      members.push_back(Dmc::from_rows(config.family.channels[c]));
    } catch (const ArgumentError& e) {
      throw ConfigError("family.channels[" + std::to_string(c) + "]: " + e.what());
    }
  }
  try {
    return CompoundFamily(std::move(members));
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("family.channels: ") + e.what());
  }
}

std::vector<double> absolute_rates(const ExperimentConfig& config, const CompoundFamily& family) {
  const int big_l = family.size();
  std::vector<double> values = config.rates.values;
  if (values.size() == 1) {
    values.assign(static_cast<std::size_t>(big_l), values.front());
  }
  if (static_cast<int>(values.size()) != big_l) {
    throw ConfigError("rates.values: expected 1 or " + std::to_string(big_l) + " entries");
  }
  if (config.rates.mode == "absolute") {
    return values;
  }
  for (int ell = 0; ell < big_l; ++ell) {
    values[static_cast<std::size_t>(ell)] *= capacity(family.channel(ell)).bits;
  }
  return values;
}

EstimationRule rule_from_config(const EstimatorConfig& estimator) {
  if (estimator.kind == "ml") {
    return EstimationRule::maximum_likelihood();
  }
  return EstimationRule::bsc_threshold(estimator.threshold);
}

DeriveOptions derive_options_from_config(const ExperimentConfig& config) {
  DeriveOptions options;
  options.alpha_m.kind = config.scheme.alpha_m.kind == "power" ? AlphaSchedule::Kind::Power
                                                               : AlphaSchedule::Kind::LogRatio;
  options.alpha_m.exponent = config.scheme.alpha_m.exponent;
  options.margin_coefficient = config.scheme.margin_coefficient;
  options.kappa_max = config.scheme.kappa_max;
  options.slack_exponent = config.scheme.slack_exponent;
  options.epoch_cap = config.scheme.epoch_cap;
  options.max_segment_bits = config.scheme.max_segment_bits;
  return options;
}

std::vector<int> realized_indices(std::span<const int> one_based, int family_size) {
  std::vector<int> indices;
  if (one_based.empty()) {
    indices.resize(static_cast<std::size_t>(family_size));
    for (int ell = 0; ell < family_size; ++ell) {
      indices[static_cast<std::size_t>(ell)] = ell;
    }
    return indices;
  }
  indices.reserve(one_based.size());
  for (int index : one_based) {
    if (index < 1 || index > family_size) {
      throw ConfigError("realized: member index " + std::to_string(index) +
                        " outside 1.." + std::to_string(family_size));
    }
    indices.push_back(index - 1);
  }
  return indices;
}

void validate_config(const ExperimentConfig& config) {
  const CompoundFamily family = family_from_config(config);
  const int big_l = family.size();

  std::vector<double> rates;
  try {
    rates = absolute_rates(config, family);
  } catch (const NumericError& e) {
    throw ConfigError(std::string("rates: capacity evaluation failed: ") + e.what());
  }
  for (int ell = 0; ell < big_l; ++ell) {
    const double value = rates[static_cast<std::size_t>(ell)];
    const double cap = capacity(family.channel(ell)).bits;
    if (!(value >= 0.0) || value >= cap) {
      throw ConfigError("rates: member " + std::to_string(ell + 1) + " rate " +
                        std::to_string(value) + " not in [0, C) with C = " + std::to_string(cap));
    }
  }

  for (const EstimatorConfig* est : {&config.message_estimator, &config.control_estimator}) {
    if (est->kind == "bsc_threshold" &&
        (!(est->threshold > 0.0) || !(est->threshold < 1.0))) {
      throw ConfigError("estimators: threshold must lie in (0, 1)");
    }
  }

  if (config.scheme.reference_index < 1 || config.scheme.reference_index > big_l) {
    throw ConfigError("scheme.reference_index: outside 1.." + std::to_string(big_l));
  }
  if (config.scheme.alpha_m.kind == "power" &&
      (!(config.scheme.alpha_m.exponent > 0.0) || !(config.scheme.alpha_m.exponent < 1.0))) {
    throw ConfigError("scheme.alpha_m.exponent: power schedule needs an exponent in (0, 1)");
  }
  if (!(config.scheme.margin_coefficient >= 0.0)) {
    throw ConfigError("scheme.margin_coefficient: must be nonnegative");
  }
  if (!(config.scheme.kappa_max > 0.0)) {
    throw ConfigError("scheme.kappa_max: must be positive");
  }
  if (!(config.scheme.slack_exponent > 0.0) || !(config.scheme.slack_exponent < 1.0)) {
    throw ConfigError("scheme.slack_exponent: must lie in (0, 1)");
  }
  if (config.scheme.max_segment_bits < 1 || config.scheme.max_segment_bits > 16) {
    throw ConfigError("scheme.max_segment_bits: must lie in 1..16");
  }
  if (config.scheme.epoch_cap < 1) {
    throw ConfigError("scheme.epoch_cap: must be at least 1");
  }

  if (config.simulate.n_schedule.empty()) {
    throw ConfigError("simulate.n_schedule: must not be empty");
  }
  int prev = 1;  // block scale must keep log2(n) > 1
  for (int n : config.simulate.n_schedule) {
    if (n <= prev) {
      throw ConfigError("simulate.n_schedule: entries must exceed 1 and strictly increase");
    }
    prev = n;
  }
  if (config.simulate.sessions < 1) {
    throw ConfigError("simulate.sessions: must be at least 1");
  }
  if (config.simulate.jobs < 1) {
    throw ConfigError("simulate.jobs: must be at least 1");
  }
  if (config.simulate.chunk < 1) {
    throw ConfigError("simulate.chunk: must be at least 1");
  }
  realized_indices(config.simulate.realized, big_l);

  if (config.oracle.n < 1) {
    throw ConfigError("oracle.n: must be at least 1");
  }
  if (config.oracle.alpha_m_len < 0 || config.oracle.alpha_c_len < 0) {
    throw ConfigError("oracle: training lengths must be nonnegative");
  }
  if (static_cast<int>(config.oracle.beta_m_len.size()) != big_l ||
      static_cast<int>(config.oracle.beta_c_len.size()) != big_l ||
      static_cast<int>(config.oracle.message_bits.size()) != big_l) {
    throw ConfigError("oracle: beta_m_len, beta_c_len, message_bits need one entry per member");
  }
  for (int ell = 0; ell < big_l; ++ell) {
    if (config.oracle.beta_m_len[ell] < 1 || config.oracle.beta_c_len[ell] < 1) {
      throw ConfigError("oracle: phase lengths must be positive at member " +
                        std::to_string(ell + 1));
    }
    if (config.oracle.message_bits[ell] < 1 ||
        config.oracle.message_bits[ell] > config.oracle.beta_m_len[ell]) {
      throw ConfigError("oracle.message_bits: member " + std::to_string(ell + 1) +
                        " must lie in 1..beta_m_len");
    }
  }
  if (config.oracle.sessions < 1) {
    throw ConfigError("oracle.sessions: must be at least 1");
  }
  if (config.oracle.jobs < 1 || config.oracle.chunk < 1) {
    throw ConfigError("oracle: jobs and chunk must be at least 1");
  }
  realized_indices(config.oracle.realized, big_l);
}

}  // namespace compound
