#include "compound/cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "compound/analysis.hpp"
#include "compound/config.hpp"
#include "compound/errors.hpp"
#include "compound/experiment.hpp"
#include "compound/infotheory.hpp"

namespace compound {

namespace {

ExperimentConfig load_with_overrides(const std::string& path,
                                     const std::vector<std::string>& sets) {
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
  for (const std::string& assignment : sets) {
    apply_override(document, assignment);
  }
  ExperimentConfig config = parse_config(document);
  apply_seed_environment(config);
  return config;
}

// Non-finite doubles are emitted as strings; JSON has no literal for them
// and a bare null would hide the sign.
Json json_number(double value) {
  if (std::isnan(value)) {
    throw NumericError("refusing to emit NaN", 0.0, 0.0);
  }
  if (std::isinf(value)) {
    return Json(value > 0.0 ? "inf" : "-inf");
  }
  return Json(value);
}

Json json_vector(std::span<const double> values) {
  Json arr = Json::array();
  for (double v : values) {
    arr.push_back(json_number(v));
  }
  return arr;
}

// Routes output to the given file or, when the path is empty, to fallback.
class OutputTarget {
 public:
  OutputTarget(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) {
        throw ConfigError("cannot open output file: " + path);
      }
      stream_ = &file_;
    }
  }
  std::ostream& get() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

int cmd_capacity(const std::string& config_path, const std::vector<std::string>& sets,
                 const std::string& out_path, std::ostream& out) {
  const ExperimentConfig config = load_with_overrides(config_path, sets);
  const CompoundFamily family = family_from_config(config);

  const std::vector<double> corner = capacity_vector(family);
  std::vector<double> burnashev;
  burnashev.reserve(static_cast<std::size_t>(family.size()));
  for (int ell = 0; ell < family.size(); ++ell) {
    burnashev.push_back(burnashev_b(family.channel(ell)).value);
  }
  Json report = Json::object();
  report["capacity_vector"] = json_vector(corner);
  report["C_NF"] = json_number(compound_capacity_nofeedback(family));
  report["C_F"] = json_number(compound_capacity_feedback(family));
  report["burnashev_vector"] = json_vector(burnashev);

  OutputTarget target(out_path, out);
  target.get() << report.dump(2) << '\n';
  return 0;
}

int cmd_phi_curve(double p, int grid_size, const std::string& out_path, std::ostream& out) {
  if (!(p > 0.0) || !(p < 0.5)) {
    throw ConfigError("phi-curve: p must lie in (0, 1/2)");
  }
  if (grid_size < 2) {
    throw ConfigError("phi-curve: grid size must be at least 2");
  }
  const std::vector<double> grid = phi_default_grid(p, grid_size);
  const RegionCurve curve = phi_curve(p, grid);

  OutputTarget target(out_path, out);
  std::ostream& os = target.get();
  os << "param";
  for (const std::string& label : curve.labels) {
    os << ',' << label;
  }
  os << '\n';
  for (std::size_t i = 0; i < curve.grid.size(); ++i) {
    os << format_number(curve.grid[i]);
    for (double component : curve.points[i].values) {
      os << ',' << format_number(component);
    }
    os << '\n';
  }
  return 0;
}

int cmd_simulate(const std::string& config_path, const std::vector<std::string>& sets,
                 int jobs_override, const std::string& out_path, std::ostream& out) {
  ExperimentConfig config = load_with_overrides(config_path, sets);
  if (jobs_override > 0) {
    config.simulate.jobs = jobs_override;
  }
  const SweepResult result = run_sweep(config);

  const std::string csv_path = !out_path.empty() ? out_path : config.simulate.csv;
  OutputTarget target(csv_path, out);
  write_sweep_csv(result, target.get());

  if (!config.simulate.transcripts.empty()) {
    std::ofstream transcripts(config.simulate.transcripts);
    if (!transcripts) {
      throw ConfigError("cannot open transcript file: " + config.simulate.transcripts);
    }
    for (const std::string& line : result.transcript_lines) {
      transcripts << line << '\n';
    }
  }
  return 0;
}

int cmd_oracle_check(const std::string& config_path, const std::vector<std::string>& sets,
                     const std::string& out_path, std::ostream& out) {
  const ExperimentConfig config = load_with_overrides(config_path, sets);
  const OracleCheckReport report = run_oracle_check(config);

  Json j = Json::object();
  j["pass"] = report.pass;
  Json cells = Json::array();
  for (const OracleCheckCell& cell : report.cells) {
    Json c = Json::object();
    c["ell"] = cell.realized + 1;
    Json oracle = Json::object();
    oracle["p_message_error"] = json_number(cell.oracle.p_message_error);
    oracle["p_control_error_given_reject"] =
        json_number(cell.oracle.p_control_error_given_reject);
    oracle["p_accept_given_accept_sent"] = json_number(cell.oracle.p_accept_given_accept_sent);
    oracle["rho"] = json_number(cell.oracle.rho);
    oracle["p_session_error"] = json_number(cell.oracle.p_session_error);
    oracle["expected_lambda"] = json_number(cell.oracle.expected_lambda);
    oracle["expected_tau"] = json_number(cell.oracle.expected_tau);
    oracle["expected_tau_over_n"] = json_number(cell.oracle.expected_tau_over_n);
    oracle["p_estimate_message"] = json_vector(cell.oracle.p_estimate_message);
    oracle["p_estimate_control"] = json_vector(cell.oracle.p_estimate_control);
    c["oracle"] = std::move(oracle);
    Json mc = Json::object();
    mc["sessions"] = cell.stats.sessions;
    mc["p_session_error"] = json_number(cell.mc.error_rate);
    mc["rho_first_epoch"] = json_number(cell.mc.rho_first_epoch);
    mc["mean_first_epoch_length"] = json_number(cell.mc_mean_first_epoch_length);
    mc["mean_tau"] = json_number(cell.mc.mean_tau);
    c["monte_carlo"] = std::move(mc);
    Json z = Json::object();
    z["p_error"] = json_number(cell.z_error);
    z["rho"] = json_number(cell.z_rho);
    z["lambda"] = json_number(cell.z_lambda);
    z["tau"] = json_number(cell.z_tau);
    c["z"] = std::move(z);
    c["pass"] = cell.pass;
    cells.push_back(std::move(c));
  }
  j["cells"] = std::move(cells);

  OutputTarget target(out_path, out);
  target.get() << j.dump(2) << '\n';
  return report.pass ? 0 : 1;
}

int cmd_exponents(const std::string& config_path, const std::vector<std::string>& sets,
                  const std::string& out_path, std::ostream& out) {
  const ExperimentConfig config = load_with_overrides(config_path, sets);
  validate_config(config);
  const CompoundFamily family = family_from_config(config);
  const std::vector<double> rates = absolute_rates(config, family);
  const EstimationRule control_rule = rule_from_config(config.control_estimator);
  const DeriveOptions options = derive_options_from_config(config);
  const std::vector<double> exponents = control_phase_exponents(family, control_rule, options);

  Json report = Json::object();
  report["lower"] = json_vector(eer_lower_bound(family, rates, exponents).values);
  report["upper"] = json_vector(trivial_upper_bound(family, rates).values);
  report["corner"] = json_vector(capacity_region_corner(family));

  OutputTarget target(out_path, out);
  target.get() << report.dump(2) << '\n';
  return 0;
}

}  // namespace

int run_cli(std::span<const char* const> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Compound-channel feedback coding experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  std::string out_path;
  double phi_p = 0.0;
  int grid_size = 201;
  int jobs_override = 0;

  CLI::App* cap = app.add_subcommand("capacity", "Member capacities and compound baselines");
  cap->add_option("--config", config_path, "JSON experiment config")->required();
  cap->add_option("--set", sets, "Dotted-path override key=value");
  cap->add_option("--out", out_path, "Output file (default stdout)");

  CLI::App* phi = app.add_subcommand("phi-curve", "Scaled exponent tradeoff curve of a BSC pair");
  phi->add_option("--p", phi_p, "Crossover probability in (0, 1/2)")->required();
  phi->add_option("--grid-size", grid_size, "Number of threshold points (default 201)");
  phi->add_option("--out", out_path, "Output file (default stdout)");

  CLI::App* sim = app.add_subcommand("simulate", "Monte Carlo sweep over the n schedule");
  sim->add_option("--config", config_path, "JSON experiment config")->required();
  sim->add_option("--set", sets, "Dotted-path override key=value");
  sim->add_option("--jobs", jobs_override, "Worker threads (overrides config)");
  sim->add_option("--out", out_path, "CSV file (overrides config csv path)");

  CLI::App* oracle = app.add_subcommand("oracle-check", "Exact enumeration vs Monte Carlo");
  oracle->add_option("--config", config_path, "JSON experiment config")->required();
  oracle->add_option("--set", sets, "Dotted-path override key=value");
  oracle->add_option("--out", out_path, "Output file (default stdout)");

  CLI::App* exponents = app.add_subcommand("exponents", "Error-exponent bounds for a config");
  exponents->add_option("--config", config_path, "JSON experiment config")->required();
  exponents->add_option("--set", sets, "Dotted-path override key=value");
  exponents->add_option("--out", out_path, "Output file (default stdout)");

  try {
    app.parse(static_cast<int>(args.size()), args.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (cap->parsed()) {
      return cmd_capacity(config_path, sets, out_path, out);
    }
    if (phi->parsed()) {
      return cmd_phi_curve(phi_p, grid_size, out_path, out);
    }
    if (sim->parsed()) {
      return cmd_simulate(config_path, sets, jobs_override, out_path, out);
    }
    if (oracle->parsed()) {
      return cmd_oracle_check(config_path, sets, out_path, out);
    }
    if (exponents->parsed()) {
      return cmd_exponents(config_path, sets, out_path, out);
    }
    err << "error: no subcommand selected\n";
    return 2;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const RunawayError& e) {
    err << "runtime cap exceeded: " << e.what() << '\n';
    return 3;
  } catch (const CapabilityError& e) {
    err << "capability bound exceeded: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace compound
