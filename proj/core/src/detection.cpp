#include "compound/detection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "compound/errors.hpp"
#include "compound/infotheory.hpp"

namespace compound {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// KL in bits without distribution validation; callers guarantee valid laws.
double raw_kl(std::span<const double> p, std::span<const double> q) {
  double d = 0.0;
  for (std::size_t y = 0; y < p.size(); ++y) {
    if (p[y] > 0.0) {
      if (q[y] == 0.0) return kInf;
      d += p[y] * std::log2(p[y] / q[y]);
    }
  }
  return d;
}

struct BscPair {
  double low_crossover;   // the member below 1/2
  int low_index;
  double crossovers[2];
};

// Accepts exactly a two-member family {BSC(p), BSC(1-p)}.
BscPair require_bsc_pair(const CompoundFamily& family) {
  constexpr double kTol = 1e-12;
  auto crossover_of = [&](int ell) -> double {
    const Dmc& ch = family.channel(ell);
    if (ch.num_inputs() != 2 || ch.num_outputs() != 2) {
      throw ArgumentError("threshold rule requires 2x2 members");
    }
    const double c = ch.prob(0, 1);
    if (std::fabs(ch.prob(0, 0) - (1.0 - c)) > kTol || std::fabs(ch.prob(1, 0) - c) > kTol ||
        std::fabs(ch.prob(1, 1) - (1.0 - c)) > kTol) {
      throw ArgumentError("threshold rule requires symmetric binary members");
    }
    return c;
  };
  if (family.size() != 2) {
    throw ArgumentError("threshold rule requires a family of exactly two members");
  }
  BscPair pair;
  pair.crossovers[0] = crossover_of(0);
  pair.crossovers[1] = crossover_of(1);
  if (std::fabs(pair.crossovers[0] + pair.crossovers[1] - 1.0) > kTol) {
    throw ArgumentError("threshold rule requires crossovers p and 1-p");
  }
  pair.low_index = pair.crossovers[0] <= pair.crossovers[1] ? 0 : 1;
  pair.low_crossover = pair.crossovers[pair.low_index];
  return pair;
}

// Composition-weighted Chernoff information between the conditional output
// laws of two channels, minimized over the tilt by golden section (the
// objective is convex in the tilt).
double weighted_chernoff(const Dmc& a, const Dmc& b, std::span<const double> w) {
  for (int x = 0; x < a.num_inputs(); ++x) {
    if (w[x] == 0.0) continue;
    bool shared = false;
    for (int y = 0; y < a.num_outputs(); ++y) {
      if (a.prob(x, y) > 0.0 && b.prob(x, y) > 0.0) {
        shared = true;
        break;
      }
    }
    if (!shared) return kInf;  // one observation separates the laws
  }
  auto objective = [&](double s) {
    double f = 0.0;
    for (int x = 0; x < a.num_inputs(); ++x) {
      if (w[x] == 0.0) continue;
      double z = 0.0;
      for (int y = 0; y < a.num_outputs(); ++y) {
        const double pa = a.prob(x, y);
        const double pb = b.prob(x, y);
        if (pa > 0.0 && pb > 0.0) {
          z += std::pow(pa, 1.0 - s) * std::pow(pb, s);
        }
      }
      f += w[x] * std::log2(z);
    }
    return f;
  };
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = 0.0, hi = 1.0;
  double s1 = hi - gr * (hi - lo), s2 = lo + gr * (hi - lo);
  double f1 = objective(s1), f2 = objective(s2);
  double best = std::min({objective(0.0), objective(1.0), f1, f2});
  for (int it = 0; it < 100; ++it) {
    if (f1 <= f2) {
      hi = s2;
      s2 = s1;
      f2 = f1;
      s1 = hi - gr * (hi - lo);
      f1 = objective(s1);
    } else {
      lo = s1;
      s1 = s2;
      f1 = f2;
      s2 = lo + gr * (hi - lo);
      f2 = objective(s2);
    }
    best = std::min({best, f1, f2});
  }
  return -best;
}

void check_composition(std::span<const double> w, int num_inputs) {
  if (static_cast<int>(w.size()) != num_inputs) {
    throw ArgumentError("composition length does not match input alphabet");
  }
  double sum = 0.0;
  for (double v : w) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ArgumentError("composition entry outside [0,1]");
    }
    sum += v;
  }
  if (std::fabs(sum - 1.0) > 1e-9) {
    throw ArgumentError("composition does not sum to 1");
  }
}

}  // namespace

TrainingSequence make_training_sequence(TrainingKind kind, int length, int num_inputs) {
  if (length <= 0) throw ArgumentError("training length must be positive");
  if (num_inputs <= 0) throw ArgumentError("input alphabet must be nonempty");
  TrainingSequence seq;
  seq.symbols.resize(length);
  for (int t = 0; t < length; ++t) {
    seq.symbols[t] = kind == TrainingKind::RoundRobin ? t % num_inputs : 0;
  }
  return seq;
}

std::vector<double> training_composition(std::span<const int> symbols, int num_inputs) {
  if (symbols.empty()) throw ArgumentError("training sequence is empty");
  std::vector<double> w(num_inputs, 0.0);
  for (int s : symbols) {
    if (s < 0 || s >= num_inputs) throw ArgumentError("training symbol outside alphabet");
    w[s] += 1.0;
  }
  for (double& v : w) v /= static_cast<double>(symbols.size());
  return w;
}

EstimationRule EstimationRule::maximum_likelihood() {
  return EstimationRule{EstimatorKind::MaximumLikelihood, 0.0};
}

EstimationRule EstimationRule::bsc_threshold(double q) {
  if (!(q > 0.0 && q < 1.0)) {
    throw ArgumentError("threshold must lie strictly inside (0,1)");
  }
  return EstimationRule{EstimatorKind::BscThreshold, q};
}

int estimate_channel(const CompoundFamily& family, const EstimationRule& rule,
                     std::span<const int> training, std::span<const int> outputs) {
  if (training.size() != outputs.size()) {
    throw ArgumentError("training and output lengths differ");
  }
  if (training.empty()) throw ArgumentError("estimation needs at least one observation");
  if (rule.kind == EstimatorKind::BscThreshold) {
    const BscPair pair = require_bsc_pair(family);
    if (!(rule.threshold > pair.low_crossover && rule.threshold < 1.0 - pair.low_crossover)) {
      throw ArgumentError("threshold must lie strictly between the crossovers");
    }
    long ones = 0;
    for (int y : outputs) {
      if (y != 0 && y != 1) throw ArgumentError("output symbol outside alphabet");
      ones += y;
    }
    const double fraction = static_cast<double>(ones) / static_cast<double>(outputs.size());
    return fraction < rule.threshold ? pair.low_index : 1 - pair.low_index;
  }
  int best = 0;
  double best_score = -kInf;
  for (int ell = 0; ell < family.size(); ++ell) {
    const Dmc& ch = family.channel(ell);
    double score = 0.0;
    for (std::size_t t = 0; t < training.size(); ++t) {
      const int x = training[t];
      const int y = outputs[t];
      if (x < 0 || x >= ch.num_inputs()) throw ArgumentError("training symbol outside alphabet");
      if (y < 0 || y >= ch.num_outputs()) throw ArgumentError("output symbol outside alphabet");
      const double p = ch.prob(x, y);
      if (p == 0.0) {
        score = -kInf;
        break;
      }
      score += std::log2(p);
    }
    if (score > best_score) {
      best_score = score;
      best = ell;
    }
  }
  return best;
}

ExponentTuple estimation_exponents(const CompoundFamily& family, const EstimationRule& rule,
                                   std::span<const double> composition) {
  check_composition(composition, family.num_inputs());
  const int big_l = family.size();
  ExponentTuple tuple;
  tuple.pairwise.assign(big_l, std::vector<double>(big_l, 0.0));
  if (rule.kind == EstimatorKind::BscThreshold) {
    const BscPair pair = require_bsc_pair(family);
    if (!(composition[0] >= 1.0 - 1e-12)) {
      throw ArgumentError("threshold exponents are defined for all-zero training");
    }
    if (!(rule.threshold >= pair.low_crossover && rule.threshold <= 1.0 - pair.low_crossover)) {
      throw ArgumentError("threshold must lie between the crossovers");
    }
    for (int ell = 0; ell < 2; ++ell) {
      tuple.pairwise[ell][1 - ell] = binary_kl(rule.threshold, pair.crossovers[ell]);
    }
  } else {
    for (int ell = 0; ell < big_l; ++ell) {
      for (int k = 0; k < big_l; ++k) {
        if (k == ell) continue;
        tuple.pairwise[ell][k] =
            weighted_chernoff(family.channel(ell), family.channel(k), composition);
      }
    }
  }
  tuple.marginal = marginal_from_pairwise(tuple.pairwise);
  return tuple;
}

std::vector<double> marginal_from_pairwise(const std::vector<std::vector<double>>& pairwise) {
  const int big_l = static_cast<int>(pairwise.size());
  std::vector<double> marginal(big_l, kInf);
  for (int ell = 0; ell < big_l; ++ell) {
    if (static_cast<int>(pairwise[ell].size()) != big_l) {
      throw ArgumentError("pairwise exponent matrix is not square");
    }
    for (int k = 0; k < big_l; ++k) {
      if (k != ell) marginal[ell] = std::min(marginal[ell], pairwise[ell][k]);
    }
  }
  return marginal;
}

std::vector<std::vector<double>> marginal_region_from_pairwise(
    const std::vector<std::vector<std::vector<double>>>& pairwise_tuples) {
  std::vector<std::vector<double>> region;
  region.reserve(pairwise_tuples.size());
  for (const auto& tuple : pairwise_tuples) {
    region.push_back(marginal_from_pairwise(tuple));
  }
  return region;
}

double ControlTest::slack(int observations) const {
  if (observations <= 0) throw ArgumentError("control test needs observations");
  return std::pow(static_cast<double>(observations), -slack_exponent);
}

ControlTest make_control_test(const Dmc& channel) {
  if (channel.num_inputs() < 2) {
    throw ArgumentError("control test needs at least two input symbols");
  }
  const BurnashevResult b = burnashev_b(channel);
  ControlTest test;
  test.accept_symbol = b.accept_symbol;
  test.reject_symbol = b.reject_symbol;
  return test;
}

ControlDecision control_decide(const ControlTest& test, const Dmc& channel,
                               std::span<const int> outputs) {
  if (outputs.empty()) throw ArgumentError("control test needs observations");
  const auto& accept_row = channel.row(test.accept_symbol);
  const auto& reject_row = channel.row(test.reject_symbol);
  double sum_accept = 0.0, sum_reject = 0.0;
  for (int y : outputs) {
    if (y < 0 || y >= channel.num_outputs()) {
      throw ArgumentError("output symbol outside alphabet");
    }
    sum_accept += accept_row[y] > 0.0 ? std::log2(accept_row[y]) : -kInf;
    sum_reject += reject_row[y] > 0.0 ? std::log2(reject_row[y]) : -kInf;
  }
  // An output impossible under the accept law disproves the accept
  // hypothesis regardless of the threshold.
  if (std::isinf(sum_accept)) return ControlDecision::Reject;
  double llr;
  if (std::isinf(sum_reject)) {
    llr = kInf;
  } else {
    llr = sum_accept - sum_reject;
  }
  const int m = static_cast<int>(outputs.size());
  const double divergence = raw_kl(accept_row, reject_row);
  const double threshold = divergence - test.slack(m);
  return llr / m >= threshold ? ControlDecision::Accept : ControlDecision::Reject;
}

namespace {

// Worst hypothesis-cover slack at one output law.
double cover_gap(std::span<const double> p, const std::vector<std::vector<double>>& laws,
                 const std::vector<std::vector<double>>& pairwise) {
  const int big_l = static_cast<int>(laws.size());
  std::vector<double> div(big_l);
  for (int ell = 0; ell < big_l; ++ell) {
    div[ell] = raw_kl(p, laws[ell]);
  }
  double best = -kInf;
  for (int k = 0; k < big_l; ++k) {
    double worst = kInf;
    for (int ell = 0; ell < big_l; ++ell) {
      if (ell == k) continue;
      worst = std::min(worst, div[ell] - pairwise[ell][k]);
    }
    best = std::max(best, worst);
  }
  return best;
}

void project_to_simplex(std::vector<double>& p) {
  double sum = 0.0;
  for (double& v : p) {
    if (v < 0.0) v = 0.0;
    sum += v;
  }
  if (sum <= 0.0) {
    std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(p.size()));
    return;
  }
  for (double& v : p) v /= sum;
}

// Nelder-Mead on the output simplex, minimizing the cover gap around a
// starting law; iterates are projected back onto the simplex.
double refine_minimum(std::vector<double> start, const std::vector<std::vector<double>>& laws,
                      const std::vector<std::vector<double>>& pairwise, double spacing) {
  const int dim = static_cast<int>(start.size());
  auto f = [&](const std::vector<double>& p) { return cover_gap(p, laws, pairwise); };
  std::vector<std::vector<double>> simplex;
  std::vector<double> values;
  simplex.push_back(start);
  values.push_back(f(start));
  for (int i = 0; i < dim; ++i) {
    std::vector<double> v = start;
    v[i] += spacing;
    project_to_simplex(v);
    simplex.push_back(v);
    values.push_back(f(v));
  }
  const int n = static_cast<int>(simplex.size());
  for (int it = 0; it < 400; ++it) {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return values[a] < values[b]; });
    const int best = order[0], worst = order[n - 1], second_worst = order[n - 2];
    if (values[worst] - values[best] < 1e-13) break;
    std::vector<double> centroid(dim, 0.0);
    for (int i = 0; i < n; ++i) {
      if (i == worst) continue;
      for (int d = 0; d < dim; ++d) centroid[d] += simplex[i][d];
    }
    for (int d = 0; d < dim; ++d) centroid[d] /= static_cast<double>(n - 1);
    auto blend = [&](double t) {
      std::vector<double> v(dim);
      for (int d = 0; d < dim; ++d) {
        v[d] = centroid[d] + t * (centroid[d] - simplex[worst][d]);
      }
      project_to_simplex(v);
      return v;
    };
    auto reflected = blend(1.0);
    const double fr = f(reflected);
    if (fr < values[best]) {
      auto expanded = blend(2.0);
      const double fe = f(expanded);
      if (fe < fr) {
        simplex[worst] = expanded;
        values[worst] = fe;
      } else {
        simplex[worst] = reflected;
        values[worst] = fr;
      }
    } else if (fr < values[second_worst]) {
      simplex[worst] = reflected;
      values[worst] = fr;
    } else {
      auto contracted = blend(-0.5);
      const double fc = f(contracted);
      if (fc < values[worst]) {
        simplex[worst] = contracted;
        values[worst] = fc;
      } else {
        for (int i = 0; i < n; ++i) {
          if (i == order[0]) continue;
          for (int d = 0; d < dim; ++d) {
            simplex[i][d] = 0.5 * (simplex[i][d] + simplex[order[0]][d]);
          }
          project_to_simplex(simplex[i]);
          values[i] = f(simplex[i]);
        }
      }
    }
  }
  return *std::min_element(values.begin(), values.end());
}

}  // namespace

double tuncel_margin(const std::vector<std::vector<double>>& pairwise,
                     const std::vector<std::vector<double>>& output_laws, int grid_resolution) {
  const int big_l = static_cast<int>(output_laws.size());
  if (big_l < 1) throw ArgumentError("need at least one output law");
  const int ny = static_cast<int>(output_laws[0].size());
  for (const auto& law : output_laws) {
    if (static_cast<int>(law.size()) != ny) {
      throw ArgumentError("output laws differ in length");
    }
  }
  if (static_cast<int>(pairwise.size()) != big_l) {
    throw ArgumentError("pairwise tuple size does not match the family");
  }
  if (grid_resolution < 10) throw ArgumentError("grid resolution must be at least 10");
  if (ny > 5) throw CapabilityError("output alphabet too large for the simplex grid");

  const int total = grid_resolution - 1;
  // Compositions of `total` over ny bins; the count is (total + ny - 1 choose
  // ny - 1), capped to keep desk-scale runtimes.
  double count = 1.0;
  for (int i = 1; i < ny; ++i) {
    count *= static_cast<double>(total + i) / static_cast<double>(i);
  }
  if (count > 4.0e6) throw CapabilityError("simplex grid too large at this resolution");

  double best = kInf;
  std::vector<double> best_point(ny, 0.0);
  std::vector<int> counts(ny, 0);
  std::vector<double> p(ny, 0.0);
  // Depth-first enumeration of the composition lattice.
  auto enumerate = [&](auto&& self, int coord, int remaining) -> void {
    if (coord == ny - 1) {
      counts[coord] = remaining;
      for (int y = 0; y < ny; ++y) {
        p[y] = static_cast<double>(counts[y]) / static_cast<double>(total);
      }
      const double gap = cover_gap(p, output_laws, pairwise);
      if (gap < best) {
        best = gap;
        best_point = p;
      }
      return;
    }
    for (int c = 0; c <= remaining; ++c) {
      counts[coord] = c;
      self(self, coord + 1, remaining - c);
    }
  };
  enumerate(enumerate, 0, total);

  const double spacing = 1.0 / static_cast<double>(total);
  const double refined = refine_minimum(best_point, output_laws, pairwise, spacing);
  return std::min(best, refined);
}

bool tuncel_member(const std::vector<std::vector<double>>& pairwise,
                   const std::vector<std::vector<double>>& output_laws, int grid_resolution) {
  return tuncel_margin(pairwise, output_laws, grid_resolution) >= -1e-9;
}

}  // namespace compound
