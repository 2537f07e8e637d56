#include "compound/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

#include "compound/errors.hpp"
#include "compound/infotheory.hpp"
#include "compound/random.hpp"

namespace compound {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Runs work(0..num_chunks-1) across up to `jobs` threads. Chunk indices are
// handed out atomically; any partition produces the same per-chunk results,
// and the caller folds them in index order.
template <typename Work>
void parallel_chunks(long long num_chunks, int jobs, Work&& work) {
  if (jobs <= 1 || num_chunks <= 1) {
    for (long long c = 0; c < num_chunks; ++c) {
      work(c);
    }
    return;
  }
  std::atomic<long long> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto body = [&] {
    while (true) {
      const long long chunk = next.fetch_add(1);
      if (chunk >= num_chunks) {
        return;
      }
      {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (error) {
          return;
        }
      }
      try {
        work(chunk);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) {
          error = std::current_exception();
        }
        return;
      }
    }
  };
  const int workers = static_cast<int>(std::min<long long>(jobs, num_chunks));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back(body);
  }
  for (std::thread& th : pool) {
    th.join();
  }
  if (error) {
    std::rethrow_exception(error);
  }
}

struct CellTask {
  const SchemeParams* params;
  const CompoundFamily* family;
  const std::vector<MessageCode>* codes;
  int realized;             // 0-based
  RngSeed seed;
  std::uint64_t domain;     // first stream coordinate (simulate vs oracle)
  std::uint64_t cell_id;
  long long sessions;
  int chunk;
  int jobs;
};

std::string transcript_line(const SchemeParams& params, int realized, long long session,
                            const SessionTranscript& t) {
  Json j = Json::object();
  j["n"] = params.n;
  j["ell"] = realized + 1;
  j["session"] = session;
  j["k"] = t.stopping_epoch;
  j["tau"] = t.total_uses;
  j["error"] = t.error;
  j["estimate"] = t.final_estimate + 1;
  j["payload_bits"] = params.message_bits[t.final_estimate];
  return j.dump();
}

CellStats run_cell(const CellTask& task, std::vector<std::string>* lines_out) {
  const long long num_chunks = (task.sessions + task.chunk - 1) / task.chunk;
  std::vector<CellStats> parts(static_cast<std::size_t>(num_chunks));
  std::vector<std::vector<std::string>> line_parts(
      lines_out != nullptr ? static_cast<std::size_t>(num_chunks) : 0);

  parallel_chunks(num_chunks, task.jobs, [&](long long c) {
    const long long begin = c * task.chunk;
    const long long end = std::min(task.sessions, begin + task.chunk);
    CellStats local;
    std::vector<std::string> local_lines;
    for (long long i = begin; i < end; ++i) {
      std::mt19937_64 rng =
          make_stream(task.seed, stream_id(task.domain, task.cell_id, static_cast<std::uint64_t>(i)));
      try {
        const SessionTranscript t =
            run_session(*task.params, *task.family, *task.codes, task.realized, rng);
        local.absorb(t, task.params->message_bits);
        if (lines_out != nullptr) {
          local_lines.push_back(transcript_line(*task.params, task.realized, i, t));
        }
      } catch (const RunawayError& e) {
        throw RunawayError("epoch cap exceeded at n=" + std::to_string(task.params->n) +
                           " ell=" + std::to_string(task.realized + 1) + " session=" +
                           std::to_string(i) + ": " + e.what());
      }
    }
    parts[static_cast<std::size_t>(c)] = std::move(local);
    if (lines_out != nullptr) {
      line_parts[static_cast<std::size_t>(c)] = std::move(local_lines);
    }
  });

  CellStats total;
  for (long long c = 0; c < num_chunks; ++c) {
    total.merge(parts[static_cast<std::size_t>(c)]);
    if (lines_out != nullptr) {
      auto& lines = line_parts[static_cast<std::size_t>(c)];
      lines_out->insert(lines_out->end(), std::make_move_iterator(lines.begin()),
                        std::make_move_iterator(lines.end()));
    }
  }
  return total;
}

double z_score(double estimate, double truth, double se) {
  if (se > 0.0) {
    return (estimate - truth) / se;
  }
  if (estimate == truth) {
    return 0.0;
  }
  return estimate > truth ? kInf : -kInf;
}

double binomial_se(double p, long long n) {
  return std::sqrt(std::max(0.0, p * (1.0 - p)) / static_cast<double>(n));
}

double sample_se(long long count, long long sum, long long sum_sq) {
  if (count < 2) {
    return 0.0;
  }
  const double n = static_cast<double>(count);
  const double mean = static_cast<double>(sum) / n;
  const double var =
      std::max(0.0, (static_cast<double>(sum_sq) - n * mean * mean) / (n - 1.0));
  return std::sqrt(var / n);
}

}  // namespace

void CellStats::absorb(const SessionTranscript& t, std::span<const int> message_bits) {
  if (t.final_estimate < 0 || t.final_estimate >= static_cast<int>(message_bits.size())) {
    throw ArgumentError("transcript estimate outside the family");
  }
  sessions += 1;
  errors += t.error ? 1 : 0;
  first_accepts += t.stopping_epoch == 1 ? 1 : 0;
  sum_k += t.stopping_epoch;
  sum_tau += t.total_uses;
  sum_tau_sq += static_cast<long long>(t.total_uses) * t.total_uses;
  sum_payload_bits += message_bits[t.final_estimate];
  const long long first_len = t.epochs.front().length;
  sum_first_len += first_len;
  sum_first_len_sq += first_len * first_len;
  if (static_cast<int>(k_counts.size()) < t.stopping_epoch) {
    k_counts.resize(static_cast<std::size_t>(t.stopping_epoch), 0);
  }
  k_counts[static_cast<std::size_t>(t.stopping_epoch - 1)] += 1;
}

void CellStats::merge(const CellStats& other) {
  sessions += other.sessions;
  errors += other.errors;
  first_accepts += other.first_accepts;
  sum_k += other.sum_k;
  sum_tau += other.sum_tau;
  sum_tau_sq += other.sum_tau_sq;
  sum_payload_bits += other.sum_payload_bits;
  sum_first_len += other.sum_first_len;
  sum_first_len_sq += other.sum_first_len_sq;
  if (k_counts.size() < other.k_counts.size()) {
    k_counts.resize(other.k_counts.size(), 0);
  }
  for (std::size_t i = 0; i < other.k_counts.size(); ++i) {
    k_counts[i] += other.k_counts[i];
  }
}

SessionStatistics statistics_from(const CellStats& s) {
  if (s.sessions <= 0) {
    throw ArgumentError("statistics need at least one session");
  }
  SessionStatistics stats;
  stats.sessions = static_cast<long>(s.sessions);
  const double n = static_cast<double>(s.sessions);
  stats.error_rate = static_cast<double>(s.errors) / n;
  stats.mean_tau = static_cast<double>(s.sum_tau) / n;
  stats.mean_k = static_cast<double>(s.sum_k) / n;
  stats.mean_payload_bits = static_cast<double>(s.sum_payload_bits) / n;
  stats.rate_estimate = stats.mean_payload_bits / stats.mean_tau;
  stats.rho_first_epoch = static_cast<double>(s.first_accepts) / n;
  stats.rho_pooled = n / static_cast<double>(s.sum_k);
  stats.empirical_exponent =
      stats.error_rate > 0.0 ? -std::log2(stats.error_rate) / stats.mean_tau : kInf;
  return stats;
}

std::vector<double> control_phase_exponents(const CompoundFamily& family,
                                            const EstimationRule& control_rule,
                                            const DeriveOptions& options) {
  const TrainingKind kind = control_rule.kind == EstimatorKind::BscThreshold
                                ? TrainingKind::AllZero
                                : options.ml_training;
  std::vector<double> composition(static_cast<std::size_t>(family.num_inputs()), 0.0);
  if (kind == TrainingKind::AllZero) {
    composition.front() = 1.0;
  } else {
    composition.assign(composition.size(), 1.0 / static_cast<double>(family.num_inputs()));
  }
  return estimation_exponents(family, control_rule, composition).marginal;
}

SweepResult run_sweep(const ExperimentConfig& config) {
  validate_config(config);
  const CompoundFamily family = family_from_config(config);
  const std::vector<double> rates = absolute_rates(config, family);
  const EstimationRule message_rule = rule_from_config(config.message_estimator);
  const EstimationRule control_rule = rule_from_config(config.control_estimator);
  const DeriveOptions options = derive_options_from_config(config);
  const std::vector<double> exponents = control_phase_exponents(family, control_rule, options);
  const ExponentPoint lower = eer_lower_bound(family, rates, exponents);
  const ExponentPoint upper = trivial_upper_bound(family, rates);
  const std::vector<int> realized = realized_indices(config.simulate.realized, family.size());
  const bool want_transcripts = !config.simulate.transcripts.empty();

  SweepResult result;
  std::uint64_t cell_id = 0;
  for (int n : config.simulate.n_schedule) {
    const SchemeParams params =
        derive_params(family, rates, exponents, message_rule, control_rule, n,
                      config.scheme.reference_index - 1, options);
    const std::vector<MessageCode> codes =
        build_message_codes(params, family, RngSeed{config.simulate.seed});
    for (int r : realized) {
      CellTask task{&params,
                    &family,
                    &codes,
                    r,
                    RngSeed{config.simulate.seed},
                    2,
                    cell_id,
                    config.simulate.sessions,
                    config.simulate.chunk,
                    config.simulate.jobs};
      SweepCell cell;
      cell.n = n;
      cell.realized = r;
      cell.stats = run_cell(task, want_transcripts ? &result.transcript_lines : nullptr);
      cell.derived = statistics_from(cell.stats);
      cell.lower_bound = lower.values[static_cast<std::size_t>(r)];
      cell.upper_bound = upper.values[static_cast<std::size_t>(r)];
      result.cells.push_back(std::move(cell));
      ++cell_id;
    }
  }
  return result;
}

std::string format_number(double value) {
  if (std::isnan(value)) {
    throw NumericError("refusing to format NaN", 0.0, 0.0);
  }
  if (std::isinf(value)) {
    return value > 0.0 ? "inf" : "-inf";
  }
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.12g", value);
  return buffer;
}

void write_sweep_csv(const SweepResult& result, std::ostream& out) {
  out << "n,ell,sessions,P_hat,R_hat,tau_mean,tau_over_n,K_mean,rho_hat,emp_exponent,"
         "lower_bound,upper_bound\n";
  for (const SweepCell& cell : result.cells) {
    const SessionStatistics& d = cell.derived;
    out << cell.n << ',' << cell.realized + 1 << ',' << d.sessions << ','
        << format_number(d.error_rate) << ',' << format_number(d.rate_estimate) << ','
        << format_number(d.mean_tau) << ','
        << format_number(d.mean_tau / static_cast<double>(cell.n)) << ','
        << format_number(d.mean_k) << ',' << format_number(d.rho_pooled) << ','
        << format_number(d.empirical_exponent) << ',' << format_number(cell.lower_bound) << ','
        << format_number(cell.upper_bound) << '\n';
  }
}

SchemeParams oracle_params(const ExperimentConfig& config, const CompoundFamily& family) {
  const int big_l = family.size();
  SchemeParams p;
  p.n = config.oracle.n;
  p.reference_index = config.scheme.reference_index - 1;
  p.rates.assign(static_cast<std::size_t>(big_l), 0.0);
  p.capacities.resize(static_cast<std::size_t>(big_l));
  p.burnashev.resize(static_cast<std::size_t>(big_l));
  p.kappa.assign(static_cast<std::size_t>(big_l), 0.0);
  p.gamma.assign(static_cast<std::size_t>(big_l), 0.0);
  p.zeta.assign(static_cast<std::size_t>(big_l), 0.0);
  p.xi.assign(static_cast<std::size_t>(big_l), 0.0);
  p.alpha_m_len = config.oracle.alpha_m_len;
  p.alpha_c_len = config.oracle.alpha_c_len;
  p.beta_m_len = config.oracle.beta_m_len;
  p.beta_c_len = config.oracle.beta_c_len;
  p.message_bits = config.oracle.message_bits;
  p.message_rule = rule_from_config(config.message_estimator);
  p.control_rule = rule_from_config(config.control_estimator);
  const DeriveOptions options = derive_options_from_config(config);
  p.message_training = p.message_rule.kind == EstimatorKind::BscThreshold
                           ? TrainingKind::AllZero
                           : options.ml_training;
  p.control_training = p.control_rule.kind == EstimatorKind::BscThreshold
                           ? TrainingKind::AllZero
                           : options.ml_training;
  p.control_tests.resize(static_cast<std::size_t>(big_l));
  p.codebook_inputs.resize(static_cast<std::size_t>(big_l));
  for (int ell = 0; ell < big_l; ++ell) {
    const Dmc& ch = family.channel(ell);
    p.capacities[static_cast<std::size_t>(ell)] = capacity(ch).bits;
    p.burnashev[static_cast<std::size_t>(ell)] = burnashev_b(ch).value;
    p.control_tests[static_cast<std::size_t>(ell)] = make_control_test(ch);
    p.control_tests[static_cast<std::size_t>(ell)].slack_exponent = config.scheme.slack_exponent;
    p.codebook_inputs[static_cast<std::size_t>(ell)] = capacity(ch).input_distribution;
  }
  p.max_segment_bits = config.scheme.max_segment_bits;
  p.epoch_cap = config.scheme.epoch_cap;
  return p;
}

OracleCheckReport run_oracle_check(const ExperimentConfig& config) {
  validate_config(config);
  const CompoundFamily family = family_from_config(config);
  const SchemeParams params = oracle_params(config, family);
  const std::vector<MessageCode> codes =
      build_message_codes(params, family, RngSeed{config.oracle.seed});
  const std::vector<int> realized = realized_indices(config.oracle.realized, family.size());

  OracleCheckReport report;
  report.pass = true;
  std::uint64_t cell_id = 0;
  for (int r : realized) {
    OracleCheckCell cell;
    cell.realized = r;
    cell.oracle = brute_force_epoch_oracle(params, family, codes, r);

    CellTask task{&params,
                  &family,
                  &codes,
                  r,
                  RngSeed{config.oracle.seed},
                  3,
                  cell_id,
                  config.oracle.sessions,
                  config.oracle.chunk,
                  config.oracle.jobs};
    cell.stats = run_cell(task, nullptr);
    cell.mc = statistics_from(cell.stats);
    cell.mc_mean_first_epoch_length =
        static_cast<double>(cell.stats.sum_first_len) / static_cast<double>(cell.stats.sessions);

    const long long s = cell.stats.sessions;
    cell.z_error =
        z_score(cell.mc.error_rate, cell.oracle.p_session_error,
                binomial_se(cell.oracle.p_session_error, s));
    cell.z_rho = z_score(cell.mc.rho_first_epoch, cell.oracle.rho, binomial_se(cell.oracle.rho, s));
    cell.z_lambda =
        z_score(cell.mc_mean_first_epoch_length, cell.oracle.expected_lambda,
                sample_se(s, cell.stats.sum_first_len, cell.stats.sum_first_len_sq));
    cell.z_tau = z_score(cell.mc.mean_tau, cell.oracle.expected_tau,
                         sample_se(s, cell.stats.sum_tau, cell.stats.sum_tau_sq));
    cell.pass = std::abs(cell.z_error) <= 4.0 && std::abs(cell.z_rho) <= 4.0 &&
                std::abs(cell.z_lambda) <= 4.0 && std::abs(cell.z_tau) <= 4.0;
    report.pass = report.pass && cell.pass;
    report.cells.push_back(std::move(cell));
    ++cell_id;
  }
  return report;
}

}  // namespace compound
