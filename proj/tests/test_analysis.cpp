#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "compound/analysis.hpp"
#include "compound/channel.hpp"
#include "compound/detection.hpp"
#include "compound/errors.hpp"
#include "compound/infotheory.hpp"
#include "compound/random.hpp"
#include "compound/scheme.hpp"

#include "exact_epoch.hpp"

using namespace compound;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double ref_burnashev_bsc(double p) {
  const long double lp = p;
  return static_cast<double>((1.0L - 2.0L * lp) * std::log2((1.0L - lp) / lp));
}

double ref_binary_kl(double a, double b) {
  const long double la = a, lb = b;
  long double d = 0.0L;
  if (la > 0.0L) d += la * std::log2(la / lb);
  if (la < 1.0L) d += (1.0L - la) * std::log2((1.0L - la) / (1.0L - lb));
  return static_cast<double>(d);
}

}  // namespace

TEST_CASE("exponent bounds match their closed forms") {
  const CompoundFamily family({bsc(0.1), bsc(0.2)});
  const double c0 = capacity(bsc(0.1)).bits;
  const double c1 = capacity(bsc(0.2)).bits;
  const std::vector<double> rates = {0.25 * c0, 0.4 * c1};
  const std::vector<double> t = {0.7, 1.2};

  const ExponentPoint upper = trivial_upper_bound(family, rates);
  const ExponentPoint lower = eer_lower_bound(family, rates, t);
  const double b0 = ref_burnashev_bsc(0.1);
  const double b1 = ref_burnashev_bsc(0.2);
  CHECK(upper.values[0] == doctest::Approx(b0 * 0.75).epsilon(1e-12));
  CHECK(upper.values[1] == doctest::Approx(b1 * 0.6).epsilon(1e-12));
  CHECK(lower.values[0] == doctest::Approx(0.7 / (0.7 + b0) * b0 * 0.75).epsilon(1e-12));
  CHECK(lower.values[1] == doctest::Approx(1.2 / (1.2 + b1) * b1 * 0.6).epsilon(1e-12));
  // The pair is ordered as floating-point values, not merely approximately.
  CHECK(lower.values[0] <= upper.values[0]);
  CHECK(lower.values[1] <= upper.values[1]);

  // An infinitely reliable retrain estimate collapses the sandwich.
  const std::vector<double> t_inf = {kInf, kInf};
  const ExponentPoint tight = eer_lower_bound(family, rates, t_inf);
  CHECK(tight.values[0] == upper.values[0]);
  CHECK(tight.values[1] == upper.values[1]);
}

TEST_CASE("erasure members price the bound by the retrain exponent") {
  // Deterministic erasure marks give an unbounded divergence pair, so the
  // upper bound is infinite and the lower bound falls back to T * (1 - R/C).
  const CompoundFamily family({bec(0.3), bec(0.5)});
  const std::vector<double> rates = {0.2, 0.1};
  const std::vector<double> t = {1.0, 2.0};

  const ExponentPoint upper = trivial_upper_bound(family, rates);
  CHECK(std::isinf(upper.values[0]));
  CHECK(std::isinf(upper.values[1]));
  const ExponentPoint lower = eer_lower_bound(family, rates, t);
  CHECK(lower.values[0] == doctest::Approx(1.0 * (1.0 - 0.2 / 0.7)).epsilon(1e-9));
  CHECK(lower.values[1] == doctest::Approx(2.0 * (1.0 - 0.1 / 0.5)).epsilon(1e-9));
}

TEST_CASE("bound input validation") {
  const CompoundFamily family({bsc(0.1), bsc(0.2)});
  const std::vector<double> t = {0.5, 0.5};
  try {
    trivial_upper_bound(family, std::vector<double>{0.1, -0.1});
    CHECK(false);
  } catch (const ArgumentError& e) {
    CHECK(std::string(e.what()).find("member 2") != std::string::npos);
  }
  try {
    trivial_upper_bound(family, std::vector<double>{2.0, 0.1});
    CHECK(false);
  } catch (const ArgumentError& e) {
    CHECK(std::string(e.what()).find("member 1") != std::string::npos);
    CHECK(std::string(e.what()).find("below capacity") != std::string::npos);
  }
  CHECK_THROWS_AS(trivial_upper_bound(family, std::vector<double>{0.1}), ArgumentError);
  CHECK_THROWS_AS(eer_lower_bound(family, std::vector<double>{0.1, 0.1}, std::vector<double>{0.5}),
                  ArgumentError);
  CHECK_THROWS_AS(
      eer_lower_bound(family, std::vector<double>{0.1, 0.1}, std::vector<double>{0.5, -0.5}),
      ArgumentError);
  const std::vector<double> t_nan = {0.5, std::nan("")};
  CHECK_THROWS_AS(eer_lower_bound(family, std::vector<double>{0.1, 0.1}, t_nan), ArgumentError);
}

TEST_CASE("scaled tradeoff points") {
  // Exact endpoints.
  const auto at_low = phi_point(0.1, 0.1);
  CHECK(at_low.first == 0.0);
  CHECK(at_low.second == 0.5);
  const auto at_high = phi_point(0.1, 0.9);
  CHECK(at_high.first == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(at_high.second == 0.0);

  // The symmetric threshold weighs both members identically, bit for bit.
  const auto mid = phi_point(0.1, 0.5);
  CHECK(mid.first == mid.second);
  CHECK(mid.first == doctest::Approx(0.225171662519).epsilon(1e-10));

  // Interior value against an independent long-double evaluation.
  for (double p : {0.1, 0.2, 0.3}) {
    for (double q : {0.25, 0.4, 0.55, 0.7}) {
      if (q < p || q > 1.0 - p) continue;
      const double b = ref_burnashev_bsc(p);
      const double low = ref_binary_kl(q, p);
      const double high = ref_binary_kl(q, 1.0 - p);
      const auto point = phi_point(p, q);
      CHECK(point.first == doctest::Approx(low / (low + b)).epsilon(1e-12));
      CHECK(point.second == doctest::Approx(high / (high + b)).epsilon(1e-12));
    }
  }

  // Swapping the threshold around one half swaps the components.
  for (double q : {0.2, 0.35, 0.6}) {
    const auto fwd = phi_point(0.1, q);
    const auto rev = phi_point(0.1, 1.0 - q);
    CHECK(fwd.first == doctest::Approx(rev.second).epsilon(1e-12));
    CHECK(fwd.second == doctest::Approx(rev.first).epsilon(1e-12));
  }

  CHECK_THROWS_AS(phi_point(0.5, 0.5), ArgumentError);
  CHECK_THROWS_AS(phi_point(0.0, 0.3), ArgumentError);
  CHECK_THROWS_AS(phi_point(-0.1, 0.3), ArgumentError);
  CHECK_THROWS_AS(phi_point(0.1, 0.05), ArgumentError);
  CHECK_THROWS_AS(phi_point(0.1, 0.95), ArgumentError);
}

TEST_CASE("threshold grids and curves") {
  const std::vector<double> grid = phi_default_grid(0.1, 21);
  CHECK(grid.size() == 21);
  CHECK(grid.front() == 0.1);
  CHECK(grid.back() == 0.9);
  for (std::size_t i = 1; i < grid.size(); ++i) CHECK(grid[i] > grid[i - 1]);
  CHECK(phi_default_grid(0.2).size() == 201);
  CHECK_THROWS_AS(phi_default_grid(0.1, 1), ArgumentError);
  CHECK_THROWS_AS(phi_default_grid(0.6, 11), ArgumentError);

  const RegionCurve curve = phi_curve(0.1, grid);
  CHECK(curve.labels == std::vector<std::string>{"component_1", "component_2"});
  CHECK(curve.points.size() == grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto point = phi_point(0.1, grid[i]);
    CHECK(curve.points[i].values[0] == point.first);
    CHECK(curve.points[i].values[1] == point.second);
    if (i > 0) {
      // One component trades off monotonically against the other.
      CHECK(curve.points[i].values[0] > curve.points[i - 1].values[0]);
      CHECK(curve.points[i].values[1] < curve.points[i - 1].values[1]);
    }
  }
  const std::vector<double> flat = {0.3, 0.3};
  CHECK_THROWS_AS(phi_curve(0.1, flat), ArgumentError);
  CHECK_THROWS_AS(phi_curve(0.1, std::vector<double>{}), ArgumentError);
}

TEST_CASE("operating point selection maximizes the weakest component") {
  RegionCurve curve;
  curve.grid = {1.0, 2.0, 3.0};
  curve.points = {ExponentPoint{{0.1, 0.9}}, ExponentPoint{{0.4, 0.5}},
                  ExponentPoint{{0.45, 0.2}}};
  curve.labels = {"a", "b"};
  const std::vector<double> unit = {1.0, 1.0};
  CHECK(select_operating_point(curve, unit) == 2.0);
  const std::vector<double> lopsided = {9.0, 0.5};
  CHECK(select_operating_point(curve, lopsided) == 2.0);

  const std::vector<double> bad_weight = {1.0, 0.0};
  CHECK_THROWS_AS(select_operating_point(curve, bad_weight), ArgumentError);
  CHECK_THROWS_AS(select_operating_point(curve, std::vector<double>{1.0}), ArgumentError);
  RegionCurve empty;
  CHECK_THROWS_AS(select_operating_point(empty, unit), ArgumentError);
  RegionCurve ragged = curve;
  ragged.points[1].values.pop_back();
  CHECK_THROWS_AS(select_operating_point(ragged, unit), ArgumentError);

  // On the symmetric pair the balanced threshold wins.
  const RegionCurve sym = phi_curve(0.1, phi_default_grid(0.1, 201));
  CHECK(select_operating_point(sym, unit) == doctest::Approx(0.5).epsilon(1e-9));

  const CompoundFamily family({bsc(0.1), bsc(0.2)});
  CHECK(capacity_region_corner(family) == capacity_vector(family));
}

namespace {

SchemeParams oracle_test_params() {
  SchemeParams p;
  p.n = 16;
  p.reference_index = 0;
  p.rates = {0.0625, 0.0625};
  p.capacities = {0.531, 0.531};
  p.burnashev = {2.536, 2.536};
  p.alpha_m_len = 2;
  p.alpha_c_len = 2;
  p.beta_m_len = {4, 4};
  p.beta_c_len = {4, 4};
  p.message_bits = {1, 1};
  p.message_rule = EstimationRule::bsc_threshold(0.5);
  p.control_rule = EstimationRule::bsc_threshold(0.5);
  p.message_training = TrainingKind::AllZero;
  p.control_training = TrainingKind::AllZero;
  p.control_tests = {make_control_test(bsc(0.1)), make_control_test(bsc(0.9))};
  p.codebook_inputs = {{0.5, 0.5}, {0.5, 0.5}};
  p.max_segment_bits = 13;
  p.epoch_cap = 100;
  return p;
}

}  // namespace

TEST_CASE("epoch oracle agrees with the independent leaf enumeration") {
  const CompoundFamily family({bsc(0.1), bsc(0.9)});
  const SchemeParams p = oracle_test_params();
  const auto codes = build_message_codes(p, family, RngSeed{101});

  for (int realized = 0; realized < 2; ++realized) {
    const EpochOracle oracle = brute_force_epoch_oracle(p, family, codes, realized);
    const reference::EpochTruth truth = reference::enumerate_epoch(p, family, codes, realized);

    for (int ell = 0; ell < 2; ++ell) {
      CHECK(oracle.p_estimate_message[ell] ==
            doctest::Approx(truth.p_estimate_message[ell]).epsilon(1e-12));
      CHECK(oracle.p_estimate_control[ell] ==
            doctest::Approx(truth.p_estimate_control[ell]).epsilon(1e-12));
    }
    CHECK(oracle.p_message_error == doctest::Approx(truth.p_message_error).epsilon(1e-12));
    CHECK(oracle.p_control_error_given_reject ==
          doctest::Approx(truth.p_control_error_given_reject).epsilon(1e-12));
    CHECK(oracle.p_accept_given_accept_sent ==
          doctest::Approx(truth.p_accept_given_accept_sent).epsilon(1e-12));
    CHECK(oracle.rho == doctest::Approx(truth.rho).epsilon(1e-12));
    CHECK(oracle.p_session_error == doctest::Approx(truth.p_session_error).epsilon(1e-12));
    CHECK(oracle.expected_lambda == doctest::Approx(truth.expected_lambda).epsilon(1e-12));
    CHECK(oracle.expected_tau == doctest::Approx(truth.expected_tau).epsilon(1e-12));
    CHECK(oracle.expected_tau_over_n ==
          doctest::Approx(truth.expected_tau / p.n).epsilon(1e-12));

    // Every phase has a fixed length here, so the mean epoch length is it.
    CHECK(oracle.expected_lambda == doctest::Approx(12.0).epsilon(1e-12));
    // Internal consistency of the assembled session quantities.
    const double pm = oracle.p_message_error;
    const double rho_check = (1.0 - pm) * oracle.p_accept_given_accept_sent +
                             pm * oracle.p_control_error_given_reject;
    CHECK(oracle.rho == doctest::Approx(rho_check).epsilon(1e-12));
    CHECK(oracle.p_session_error ==
          doctest::Approx(pm * oracle.p_control_error_given_reject / oracle.rho).epsilon(1e-12));
  }

  // Two training uses of the symmetric pair give exact estimate laws.
  const EpochOracle low = brute_force_epoch_oracle(p, family, codes, 0);
  CHECK(low.p_estimate_message[0] == doctest::Approx(0.81).epsilon(1e-12));
  CHECK(low.p_estimate_message[1] == doctest::Approx(0.19).epsilon(1e-12));
  const EpochOracle high = brute_force_epoch_oracle(p, family, codes, 1);
  CHECK(high.p_estimate_message[0] == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(high.p_estimate_message[1] == doctest::Approx(0.99).epsilon(1e-12));
}

TEST_CASE("epoch oracle capability gates") {
  const CompoundFamily family({bsc(0.1), bsc(0.9)});
  const SchemeParams p = oracle_test_params();
  const auto codes = build_message_codes(p, family, RngSeed{101});

  CHECK_THROWS_AS(brute_force_epoch_oracle(p, family, codes, 2), ArgumentError);
  CHECK_THROWS_AS(brute_force_epoch_oracle(p, family, codes, -1), ArgumentError);

  std::vector<MessageCode> short_codes = {codes[0]};
  CHECK_THROWS_AS(brute_force_epoch_oracle(p, family, short_codes, 0), ArgumentError);

  SchemeParams mismatched = p;
  mismatched.beta_m_len = {5, 5};
  CHECK_THROWS_AS(brute_force_epoch_oracle(mismatched, family, codes, 0), ArgumentError);

  SchemeParams long_epoch = p;
  long_epoch.beta_m_len = {9, 9};
  const auto long_codes = build_message_codes(long_epoch, family, RngSeed{101});
  CHECK_THROWS_AS(brute_force_epoch_oracle(long_epoch, family, long_codes, 0), CapabilityError);

  const CompoundFamily erasures({bec(0.3), bec(0.5)});
  SchemeParams ep = p;
  ep.message_rule = EstimationRule::maximum_likelihood();
  ep.control_rule = EstimationRule::maximum_likelihood();
  ep.control_tests = {make_control_test(bec(0.3)), make_control_test(bec(0.5))};
  const auto ecodes = build_message_codes(ep, erasures, RngSeed{101});
  CHECK_THROWS_AS(brute_force_epoch_oracle(ep, erasures, ecodes, 0), CapabilityError);
}
