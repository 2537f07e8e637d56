#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "compound/channel.hpp"
#include "compound/config.hpp"
#include "compound/errors.hpp"
#include "compound/infotheory.hpp"

using namespace compound;

namespace {

Json minimal_doc() { return Json{{"family", {{"bsc_pair", 0.1}}}}; }

std::string message_of(const std::function<void()>& thrower) {
  try {
    thrower();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("a minimal document fills every default") {
  const ExperimentConfig config = parse_config(minimal_doc());
  CHECK(config.family.bsc_pair == 0.1);
  CHECK(config.family.channels.empty());
  CHECK(config.rates.mode == "fractions_of_capacity");
  CHECK(config.rates.values == std::vector<double>{0.25});
  CHECK(config.message_estimator.kind == "bsc_threshold");
  CHECK(config.message_estimator.threshold == 0.5);
  CHECK(config.control_estimator == config.message_estimator);
  CHECK(config.scheme.reference_index == 1);
  CHECK(config.scheme.alpha_m.kind == "log_ratio");
  CHECK(config.scheme.alpha_m.exponent == 0.5);
  CHECK(config.scheme.margin_coefficient == 6.0);
  CHECK(config.scheme.kappa_max == 10.0);
  CHECK(config.scheme.slack_exponent == 0.25);
  CHECK(config.scheme.max_segment_bits == 13);
  CHECK(config.scheme.epoch_cap == 10000);
  CHECK(config.simulate.n_schedule == std::vector<int>{256});
  CHECK(config.simulate.sessions == 1000);
  CHECK(config.simulate.realized.empty());
  CHECK(config.simulate.seed == 1);
  CHECK(config.simulate.jobs == 1);
  CHECK(config.simulate.chunk == 256);
  CHECK(config.simulate.csv.empty());
  CHECK(config.simulate.transcripts.empty());
  CHECK(config.oracle.n == 16);
  CHECK(config.oracle.alpha_m_len == 2);
  CHECK(config.oracle.beta_m_len == std::vector<int>{4, 4});
  CHECK(config.oracle.alpha_c_len == 2);
  CHECK(config.oracle.beta_c_len == std::vector<int>{4, 4});
  CHECK(config.oracle.message_bits == std::vector<int>{1, 1});
  CHECK(config.oracle.sessions == 1000000);
  CHECK(config.oracle.seed == 1);
  CHECK(config.oracle.jobs == 1);
  CHECK(config.oracle.chunk == 4096);
  CHECK_NOTHROW(validate_config(config));
}

TEST_CASE("parse and serialize are inverse") {
  Json doc = minimal_doc();
  doc["rates"] = {{"mode", "absolute"}, {"values", {0.1, 0.2}}};
  doc["estimators"] = {{"message", {{"kind", "ml"}}},
                       {"control", {{"kind", "bsc_threshold"}, {"threshold", 0.45}}}};
  doc["scheme"] = {{"reference_index", 2},
                   {"alpha_m", {{"kind", "power"}, {"exponent", 0.6}}},
                   {"margin_coefficient", 3.0}};
  doc["simulate"] = {{"n_schedule", {64, 128, 256}},
                     {"sessions", 5000},
                     {"realized", {1}},
                     {"seed", 42},
                     {"csv", "out.csv"}};
  doc["oracle"] = {{"seed", 7}, {"jobs", 4}};

  const ExperimentConfig config = parse_config(doc);
  CHECK(config.rates.mode == "absolute");
  CHECK(config.message_estimator.kind == "ml");
  CHECK(config.control_estimator.threshold == 0.45);
  CHECK(config.scheme.alpha_m.kind == "power");
  CHECK(config.simulate.realized == std::vector<int>{1});
  CHECK(config.oracle.jobs == 4);

  const Json canonical = config_to_json(config);
  const ExperimentConfig reparsed = parse_config(canonical);
  CHECK(reparsed == config);
  // Canonical form is a fixed point byte for byte.
  CHECK(config_to_json(reparsed).dump() == canonical.dump());

  // Explicit matrices survive the roundtrip too.
  Json matrix_doc = {
      {"family",
       {{"channels",
         {{{0.9, 0.1}, {0.1, 0.9}}, {{0.8, 0.2}, {0.3, 0.7}}}}}}};
  const ExperimentConfig with_channels = parse_config(matrix_doc);
  CHECK(with_channels.family.bsc_pair < 0.0);
  CHECK(with_channels.family.channels.size() == 2);
  CHECK(with_channels.family.channels[1][1] == std::vector<double>{0.3, 0.7});
  CHECK(parse_config(config_to_json(with_channels)) == with_channels);
}

TEST_CASE("strict parsing names the offending path") {
  {
    Json doc = minimal_doc();
    doc["bogus"] = 1;
    const std::string msg = message_of([&] { (void)parse_config(doc); });
    CHECK(msg.find("bogus") != std::string::npos);
    CHECK(msg.find("unknown key") != std::string::npos);
  }
  {
    Json doc = minimal_doc();
    doc["family"]["typo"] = 1;
    const std::string msg = message_of([&] { (void)parse_config(doc); });
    CHECK(msg.find("family.typo") != std::string::npos);
  }
  {
    Json doc = minimal_doc();
    doc["estimators"] = {{"message", {{"lvl", 3}}}};
    const std::string msg = message_of([&] { (void)parse_config(doc); });
    CHECK(msg.find("estimators.message.lvl") != std::string::npos);
  }
  {
    Json doc = minimal_doc();
    doc["simulate"] = {{"sessions", 2.5}};
    const std::string msg = message_of([&] { (void)parse_config(doc); });
    CHECK(msg.find("simulate.sessions") != std::string::npos);
    CHECK(msg.find("integer") != std::string::npos);
  }

  CHECK_THROWS_AS((void)parse_config(Json::array()), ConfigError);
  CHECK_THROWS_AS((void)parse_config(Json{{"rates", Json::object()}}), ConfigError);

  Json both = minimal_doc();
  both["family"]["channels"] = {{{1.0, 0.0}, {0.0, 1.0}}};
  CHECK_THROWS_AS((void)parse_config(both), ConfigError);
  CHECK_THROWS_AS((void)parse_config(Json{{"family", Json::object()}}), ConfigError);

  Json bad_pair = minimal_doc();
  bad_pair["family"]["bsc_pair"] = 0.6;
  CHECK_THROWS_AS((void)parse_config(bad_pair), ConfigError);
  bad_pair["family"]["bsc_pair"] = "0.1";
  CHECK_THROWS_AS((void)parse_config(bad_pair), ConfigError);

  Json bad_mode = minimal_doc();
  bad_mode["rates"] = {{"mode", "percent"}};
  CHECK_THROWS_AS((void)parse_config(bad_mode), ConfigError);

  Json bad_kind = minimal_doc();
  bad_kind["estimators"] = {{"control", {{"kind", "map"}}}};
  CHECK_THROWS_AS((void)parse_config(bad_kind), ConfigError);

  Json bad_seed = minimal_doc();
  bad_seed["simulate"] = {{"seed", -5}};
  const std::string msg = message_of([&] { (void)parse_config(bad_seed); });
  CHECK(msg.find("nonnegative") != std::string::npos);
}

TEST_CASE("dotted overrides edit the raw document") {
  Json doc = minimal_doc();
  apply_override(doc, "simulate.jobs=8");
  CHECK(doc["simulate"]["jobs"] == 8);
  CHECK(doc["simulate"]["jobs"].is_number_integer());

  apply_override(doc, "simulate.csv=run.csv");
  CHECK(doc["simulate"]["csv"] == "run.csv");
  CHECK(doc["simulate"]["csv"].is_string());

  apply_override(doc, "simulate.transcripts=\"quoted.jsonl\"");
  CHECK(doc["simulate"]["transcripts"] == "quoted.jsonl");

  apply_override(doc, "simulate.n_schedule=[128,256,512]");
  CHECK(doc["simulate"]["n_schedule"] == Json({128, 256, 512}));

  // Missing intermediate objects are created on the way down.
  apply_override(doc, "scheme.alpha_m.kind=power");
  CHECK(doc["scheme"]["alpha_m"]["kind"] == "power");
  apply_override(doc, "scheme.alpha_m.exponent=0.6");
  CHECK(doc["scheme"]["alpha_m"]["exponent"] == 0.6);

  const ExperimentConfig config = parse_config(doc);
  CHECK(config.simulate.jobs == 8);
  CHECK(config.scheme.alpha_m.kind == "power");

  CHECK_THROWS_AS(apply_override(doc, "simulate.jobs"), ConfigError);
  CHECK_THROWS_AS(apply_override(doc, "=5"), ConfigError);
  CHECK_THROWS_AS(apply_override(doc, "simulate..jobs=5"), ConfigError);
  Json scalar_in_the_way = minimal_doc();
  scalar_in_the_way["simulate"] = 5;
  CHECK_THROWS_AS(apply_override(scalar_in_the_way, "simulate.jobs=1"), ConfigError);
}

TEST_CASE("environment seed override") {
  ExperimentConfig config = parse_config(minimal_doc());
  unsetenv("COMPOUND_SIM_SEED");
  CHECK_FALSE(apply_seed_environment(config));
  CHECK(config.simulate.seed == 1);

  setenv("COMPOUND_SIM_SEED", "777", 1);
  CHECK(apply_seed_environment(config));
  CHECK(config.simulate.seed == 777);
  CHECK(config.oracle.seed == 777);

  setenv("COMPOUND_SIM_SEED", "12x", 1);
  CHECK_THROWS_AS(apply_seed_environment(config), ConfigError);
  setenv("COMPOUND_SIM_SEED", "", 1);
  CHECK_FALSE(apply_seed_environment(config));
  unsetenv("COMPOUND_SIM_SEED");
}

TEST_CASE("semantic validation") {
  auto broken = [](const std::function<void(ExperimentConfig&)>& mutate) {
    ExperimentConfig config = parse_config(Json{{"family", {{"bsc_pair", 0.1}}}});
    mutate(config);
    return message_of([&] { validate_config(config); });
  };

  CHECK(broken([](ExperimentConfig& c) { c.rates.values = {1.0}; }).find("rates") == 0);
  CHECK(broken([](ExperimentConfig& c) { c.rates.values = {-0.1}; }).find("rates") == 0);
  CHECK(broken([](ExperimentConfig& c) { c.rates.values = {0.1, 0.1, 0.1}; })
            .find("rates.values") == 0);
  CHECK(broken([](ExperimentConfig& c) { c.message_estimator.threshold = 1.0; })
            .find("estimators") == 0);
  CHECK(broken([](ExperimentConfig& c) { c.scheme.reference_index = 3; })
            .find("scheme.reference_index") == 0);
  CHECK(broken([](ExperimentConfig& c) {
          c.scheme.alpha_m.kind = "power";
          c.scheme.alpha_m.exponent = 1.2;
        }).find("scheme.alpha_m.exponent") == 0);
  CHECK(broken([](ExperimentConfig& c) { c.scheme.margin_coefficient = -1.0; })
            .find("scheme.margin_coefficient") == 0);
  CHECK(broken([](ExperimentConfig& c) { c.scheme.kappa_max = 0.0; })
            .find("scheme.kappa_max") == 0);
  CHECK(broken([](ExperimentConfig& c) { c.scheme.slack_exponent = 1.0; })
            .find("scheme.slack_exponent") == 0);
  CHECK(broken([](ExperimentConfig& c) { c.scheme.max_segment_bits = 17; })
            .find("scheme.max_segment_bits") == 0);
  CHECK(broken([](ExperimentConfig& c) { c.scheme.epoch_cap = 0; })
            .find("scheme.epoch_cap") == 0);
  CHECK(broken([](ExperimentConfig& c) { c.simulate.n_schedule = {}; })
            .find("simulate.n_schedule") == 0);
  CHECK(broken([](ExperimentConfig& c) { c.simulate.n_schedule = {256, 128}; })
            .find("simulate.n_schedule") == 0);
  CHECK(broken([](ExperimentConfig& c) { c.simulate.n_schedule = {1}; })
            .find("simulate.n_schedule") == 0);
  CHECK(broken([](ExperimentConfig& c) { c.simulate.sessions = 0; })
            .find("simulate.sessions") == 0);
  CHECK(broken([](ExperimentConfig& c) { c.simulate.jobs = 0; })
            .find("simulate.jobs") == 0);
  CHECK(broken([](ExperimentConfig& c) { c.simulate.chunk = 0; })
            .find("simulate.chunk") == 0);
  CHECK(broken([](ExperimentConfig& c) { c.simulate.realized = {3}; })
            .find("realized") == 0);
  CHECK(broken([](ExperimentConfig& c) { c.oracle.beta_m_len = {4}; })
            .find("oracle") == 0);
  CHECK(broken([](ExperimentConfig& c) { c.oracle.message_bits = {5, 1}; })
            .find("oracle.message_bits") == 0);
  CHECK(broken([](ExperimentConfig& c) { c.oracle.beta_c_len = {0, 4}; })
            .find("oracle") == 0);
  CHECK(broken([](ExperimentConfig& c) { c.oracle.sessions = 0; })
            .find("oracle.sessions") == 0);
}

TEST_CASE("construction helpers") {
  const ExperimentConfig config = parse_config(minimal_doc());
  const CompoundFamily family = family_from_config(config);
  CHECK(family.size() == 2);
  CHECK(family.channel(0).prob(0, 1) == 0.1);
  CHECK(family.channel(1).prob(0, 1) == 0.9);

  // A fraction scales each member capacity; one entry broadcasts.
  const std::vector<double> scaled = absolute_rates(config, family);
  CHECK(scaled.size() == 2);
  CHECK(scaled[0] == 0.25 * capacity(family.channel(0)).bits);
  CHECK(scaled[1] == 0.25 * capacity(family.channel(1)).bits);

  ExperimentConfig absolute = config;
  absolute.rates.mode = "absolute";
  absolute.rates.values = {0.3, 0.2};
  CHECK(absolute_rates(absolute, family) == std::vector<double>{0.3, 0.2});
  absolute.rates.values = {0.3, 0.2, 0.1};
  CHECK_THROWS_AS(absolute_rates(absolute, family), ConfigError);

  ExperimentConfig bad_rows = config;
  bad_rows.family.bsc_pair = -1.0;
  bad_rows.family.channels = {{{0.9, 0.2}, {0.1, 0.9}}};
  const std::string msg = message_of([&] { (void)family_from_config(bad_rows); });
  CHECK(msg.find("family.channels[0]") != std::string::npos);

  const EstimationRule ml = rule_from_config(EstimatorConfig{"ml", 0.5});
  CHECK(ml.kind == EstimatorKind::MaximumLikelihood);
  const EstimationRule thresh = rule_from_config(EstimatorConfig{"bsc_threshold", 0.45});
  CHECK(thresh.kind == EstimatorKind::BscThreshold);
  CHECK(thresh.threshold == 0.45);

  ExperimentConfig tuned = config;
  tuned.scheme.alpha_m = {"power", 0.7};
  tuned.scheme.margin_coefficient = 2.0;
  tuned.scheme.kappa_max = 5.0;
  tuned.scheme.slack_exponent = 0.3;
  tuned.scheme.epoch_cap = 77;
  tuned.scheme.max_segment_bits = 9;
  const DeriveOptions options = derive_options_from_config(tuned);
  CHECK(options.alpha_m.kind == AlphaSchedule::Kind::Power);
  CHECK(options.alpha_m.exponent == 0.7);
  CHECK(options.margin_coefficient == 2.0);
  CHECK(options.kappa_max == 5.0);
  CHECK(options.slack_exponent == 0.3);
  CHECK(options.epoch_cap == 77);
  CHECK(options.max_segment_bits == 9);

  CHECK(realized_indices(std::vector<int>{}, 3) == std::vector<int>{0, 1, 2});
  CHECK(realized_indices(std::vector<int>{2, 1}, 2) == std::vector<int>{1, 0});
  CHECK_THROWS_AS(realized_indices(std::vector<int>{3}, 2), ConfigError);
  CHECK_THROWS_AS(realized_indices(std::vector<int>{0}, 2), ConfigError);
}

TEST_CASE("config files") {
  const std::string good = "/tmp/compound_config_good.json";
  {
    std::ofstream out(good);
    out << R"({"family": {"bsc_pair": 0.2}, "simulate": {"seed": 9}})";
  }
  const ExperimentConfig config = load_config_file(good);
  CHECK(config.family.bsc_pair == 0.2);
  CHECK(config.simulate.seed == 9);

  const std::string msg =
      message_of([&] { (void)load_config_file("/tmp/compound_config_missing.json"); });
  CHECK(msg.find("cannot open") != std::string::npos);

  const std::string bad = "/tmp/compound_config_bad.json";
  {
    std::ofstream out(bad);
    out << "{not json";
  }
  const std::string parse_msg = message_of([&] { (void)load_config_file(bad); });
  CHECK(parse_msg.find("not valid JSON") != std::string::npos);
}
