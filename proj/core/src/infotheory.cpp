#include "compound/infotheory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "compound/errors.hpp"

namespace compound {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDistributionTolerance = 1e-9;

void check_distribution(std::span<const double> p, const char* name) {
  if (p.empty()) {
    throw ArgumentError(std::string(name) + " is empty");
  }
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ArgumentError(std::string(name) + " has an entry outside [0,1]");
    }
    sum += v;
  }
  if (std::fabs(sum - 1.0) > kDistributionTolerance) {
    throw ArgumentError(std::string(name) + " does not sum to 1");
  }
}

// Output distribution q = P Q.
std::vector<double> output_distribution(std::span<const double> input, const Dmc& channel) {
  std::vector<double> q(channel.num_outputs(), 0.0);
  for (int x = 0; x < channel.num_inputs(); ++x) {
    if (input[x] == 0.0) continue;
    const auto& row = channel.row(x);
    for (int y = 0; y < channel.num_outputs(); ++y) {
      q[y] += input[x] * row[y];
    }
  }
  return q;
}

// Relative entropy of one channel row against a reference output law; the
// reference is guaranteed positive wherever the row is by the callers.
double row_divergence(const std::vector<double>& row, const std::vector<double>& q) {
  double d = 0.0;
  for (std::size_t y = 0; y < row.size(); ++y) {
    if (row[y] > 0.0) {
      d += row[y] * std::log2(row[y] / q[y]);
    }
  }
  return d;
}

// One weighted Blahut-Arimoto ascent: maximizes sum_ell lambda_ell I(P, Q_ell).
// Returns the certified bracket [lower, upper] and the final input law.
struct WeightedBaResult {
  double lower = 0.0;
  double upper = kInf;
  std::vector<double> input;
  int iterations = 0;
  bool converged = false;
};

WeightedBaResult weighted_blahut_arimoto(const CompoundFamily& family,
                                         std::span<const double> lambda, double tol,
                                         int max_iterations) {
  const int nx = family.num_inputs();
  const int big_l = family.size();
  // Log-domain input law; floored so no live input ever underflows to zero,
  // which keeps every divergence finite.
  constexpr double kLogFloor = -400.0;
  std::vector<double> logp(nx, -std::log2(static_cast<double>(nx)));
  std::vector<double> p(nx), score(nx);
  std::vector<std::vector<double>> q(big_l);
  WeightedBaResult result;
  for (int it = 1; it <= max_iterations; ++it) {
    double norm = 0.0;
    for (int x = 0; x < nx; ++x) {
      p[x] = std::exp2(logp[x]);
      norm += p[x];
    }
    for (int x = 0; x < nx; ++x) p[x] /= norm;
    for (int ell = 0; ell < big_l; ++ell) {
      q[ell] = output_distribution(p, family.channel(ell));
    }
    double lower = 0.0;
    double upper = -kInf;
    for (int x = 0; x < nx; ++x) {
      double s = 0.0;
      for (int ell = 0; ell < big_l; ++ell) {
        if (lambda[ell] == 0.0) continue;
        s += lambda[ell] * row_divergence(family.channel(ell).row(x), q[ell]);
      }
      score[x] = s;
      lower += p[x] * s;
      upper = std::max(upper, s);
    }
    result.lower = lower;
    result.upper = upper;
    result.input = p;
    result.iterations = it;
    if (upper - lower <= tol) {
      result.converged = true;
      return result;
    }
    double max_logp = -kInf;
    for (int x = 0; x < nx; ++x) {
      logp[x] += score[x];
      max_logp = std::max(max_logp, logp[x]);
    }
    for (int x = 0; x < nx; ++x) {
      logp[x] = std::max(logp[x] - max_logp, kLogFloor);
    }
  }
  return result;
}

}  // namespace

double entropy_bits(std::span<const double> p) {
  check_distribution(p, "distribution");
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log2(v);
  }
  return h;
}

double binary_entropy(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ArgumentError("binary_entropy argument outside [0,1]");
  }
  double h = 0.0;
  if (p > 0.0) h -= p * std::log2(p);
  if (p < 1.0) h -= (1.0 - p) * std::log2(1.0 - p);
  return h;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw ArgumentError("kl_divergence arguments differ in length");
  }
  check_distribution(p, "kl_divergence first argument");
  check_distribution(q, "kl_divergence second argument");
  double d = 0.0;
  for (std::size_t y = 0; y < p.size(); ++y) {
    if (p[y] > 0.0) {
      if (q[y] == 0.0) {
        return kInf;
      }
      d += p[y] * std::log2(p[y] / q[y]);
    }
  }
  return d;
}

double binary_kl(double a, double b) {
  const double p[2] = {a, 1.0 - a};
  const double q[2] = {b, 1.0 - b};
  return kl_divergence(std::span<const double>(p, 2), std::span<const double>(q, 2));
}

double mutual_information(std::span<const double> input, const Dmc& channel) {
  if (static_cast<int>(input.size()) != channel.num_inputs()) {
    throw ArgumentError("mutual_information input law does not match channel inputs");
  }
  check_distribution(input, "input distribution");
  const auto q = output_distribution(input, channel);
  double i = 0.0;
  for (int x = 0; x < channel.num_inputs(); ++x) {
    if (input[x] > 0.0) {
      i += input[x] * row_divergence(channel.row(x), q);
    }
  }
  return i;
}

CapacityResult capacity(const Dmc& channel, double tol) {
  if (!(tol > 0.0)) {
    throw ArgumentError("capacity tolerance must be positive");
  }
  const double lambda[1] = {1.0};
  CompoundFamily singleton({channel});
  const auto ba = weighted_blahut_arimoto(singleton, std::span<const double>(lambda, 1), tol,
                                          kMaxIterations);
  if (!ba.converged) {
    std::ostringstream msg;
    msg << "capacity did not converge within " << kMaxIterations
        << " iterations; best bracket [" << ba.lower << ", " << ba.upper << "]";
    throw NumericError(msg.str(), ba.lower, ba.upper);
  }
  return CapacityResult{ba.lower, ba.input, ba.iterations};
}

BurnashevResult burnashev_b(const Dmc& channel) {
  BurnashevResult best;
  best.value = 0.0;
  best.accept_symbol = 0;
  best.reject_symbol = 0;
  const int nx = channel.num_inputs();
  for (int a = 0; a < nx; ++a) {
    for (int r = 0; r < nx; ++r) {
      if (a == r) continue;
      const double d = kl_divergence(channel.row(a), channel.row(r));
      if (d > best.value) {
        best.value = d;
        best.accept_symbol = a;
        best.reject_symbol = r;
      }
    }
  }
  return best;
}

std::vector<double> capacity_vector(const CompoundFamily& family, double tol) {
  std::vector<double> c(family.size());
  for (int ell = 0; ell < family.size(); ++ell) {
    c[ell] = capacity(family.channel(ell), tol).bits;
  }
  return c;
}

double compound_capacity_feedback(const CompoundFamily& family, double tol) {
  const auto c = capacity_vector(family, tol);
  return *std::min_element(c.begin(), c.end());
}

double compound_capacity_nofeedback(const CompoundFamily& family, double tol) {
  if (!(tol > 0.0)) {
    throw ArgumentError("compound_capacity_nofeedback tolerance must be positive");
  }
  const int big_l = family.size();
  if (big_l == 1) {
    return capacity(family.channel(0), tol).bits;
  }
  const double inner_tol = tol / 4.0;

  // Any input law certifies a lower bound min_ell I(P, Q_ell). Alongside the
  // running bracket, remember the best input seen per weakest member: when
  // the saddle sits on a kink between members, mixing inputs from the two
  // sides of the kink recovers the linear loss that a value-converged inner
  // solve leaves behind.
  double best_lower = -kInf;
  double best_upper = kInf;
  std::vector<std::vector<double>> champion_input(static_cast<std::size_t>(big_l));
  std::vector<double> champion_value(static_cast<std::size_t>(big_l), -kInf);
  auto consider = [&](const std::vector<double>& p) {
    double worst = kInf;
    int worst_ell = 0;
    for (int ell = 0; ell < big_l; ++ell) {
      const double info = mutual_information(p, family.channel(ell));
      if (info < worst) {
        worst = info;
        worst_ell = ell;
      }
    }
    best_lower = std::max(best_lower, worst);
    if (worst > champion_value[static_cast<std::size_t>(worst_ell)]) {
      champion_value[static_cast<std::size_t>(worst_ell)] = worst;
      champion_input[static_cast<std::size_t>(worst_ell)] = p;
    }
    return worst;
  };

  // Fast path: if the weakest member's own optimum is simultaneously the
  // family minimum, the saddle sits at that corner and the bracket closes
  // immediately (upper bound C_k from the corner mixture, lower bound from
  // the primal value).
  {
    double weakest_c = kInf;
    std::vector<std::vector<double>> inputs(big_l);
    for (int ell = 0; ell < big_l; ++ell) {
      const auto cap = capacity(family.channel(ell), inner_tol);
      inputs[ell] = cap.input_distribution;
      weakest_c = std::min(weakest_c, cap.bits);
    }
    best_upper = weakest_c + inner_tol;
    for (int ell = 0; ell < big_l; ++ell) {
      consider(inputs[ell]);
    }
    if (best_upper - best_lower <= tol) {
      return best_lower;
    }
  }

  // Dual descent over mixture weights: g(lambda) = max_P sum lambda_ell I is
  // convex, evaluated by weighted Blahut-Arimoto; every evaluation tightens
  // the bracket from both sides.
  std::vector<double> best_lambda(static_cast<std::size_t>(big_l),
                                  1.0 / static_cast<double>(big_l));
  auto evaluate = [&](std::span<const double> lambda) {
    const auto ba = weighted_blahut_arimoto(family, lambda, inner_tol, kMaxIterations);
    if (ba.upper < best_upper) {
      best_lambda.assign(lambda.begin(), lambda.end());
      best_upper = ba.upper;
    }
    consider(ba.input);
    return ba;
  };

  if (big_l == 2) {
    // Golden-section on lambda = (1-t, t); g is convex in t.
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = 0.0, hi = 1.0;
    double t1 = hi - gr * (hi - lo);
    double t2 = lo + gr * (hi - lo);
    auto eval_t = [&](double t) {
      const double lambda[2] = {1.0 - t, t};
      return evaluate(std::span<const double>(lambda, 2)).upper;
    };
    double g1 = eval_t(t1);
    double g2 = eval_t(t2);
    for (int it = 0; it < 200 && best_upper - best_lower > tol; ++it) {
      if (g1 <= g2) {
        hi = t2;
        t2 = t1;
        g2 = g1;
        t1 = hi - gr * (hi - lo);
        g1 = eval_t(t1);
      } else {
        lo = t1;
        t1 = t2;
        g1 = g2;
        t2 = lo + gr * (hi - lo);
        g2 = eval_t(t2);
      }
    }
  } else {
    // Projected subgradient on the mixture simplex; subgradient of g at
    // lambda is the vector of member informations at the inner maximizer.
    std::vector<double> lambda(big_l, 1.0 / big_l);
    for (int it = 1; it <= 400 && best_upper - best_lower > tol; ++it) {
      const auto ba = evaluate(lambda);
      std::vector<double> grad(big_l);
      for (int ell = 0; ell < big_l; ++ell) {
        grad[ell] = mutual_information(ba.input, family.channel(ell));
      }
      const double step = 0.5 / std::sqrt(static_cast<double>(it));
      for (int ell = 0; ell < big_l; ++ell) {
        lambda[ell] -= step * grad[ell];
      }
      // Euclidean projection onto the simplex.
      std::vector<double> sorted = lambda;
      std::sort(sorted.begin(), sorted.end(), std::greater<>());
      double cum = 0.0, theta = 0.0;
      int support = 0;
      for (int j = 0; j < big_l; ++j) {
        cum += sorted[j];
        const double candidate = (cum - 1.0) / (j + 1);
        if (sorted[j] - candidate > 0.0) {
          theta = candidate;
          support = j + 1;
        }
      }
      (void)support;
      for (int ell = 0; ell < big_l; ++ell) {
        lambda[ell] = std::max(0.0, lambda[ell] - theta);
      }
    }
  }

  // The dual loop converges in value, but an inner solve converged to eps in
  // value can leave an input sqrt(eps) away from the saddle, where the min
  // over members still pays a linear kink penalty. Polish the primal side:
  // one tight inner solve at the best weights, then equalize across the kink
  // by line search between the champion inputs of different weakest members.
  // The minimum of concave functions is concave along a segment, so golden
  // section finds the equalizer.
  if (best_upper - best_lower > tol) {
    const auto fine = weighted_blahut_arimoto(family, best_lambda,
                                              std::min(inner_tol, 1e-13), 4 * kMaxIterations);
    best_upper = std::min(best_upper, fine.upper);
    consider(fine.input);
  }
  if (best_upper - best_lower > tol) {
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int a = 0; a < big_l && best_upper - best_lower > tol; ++a) {
      if (champion_input[static_cast<std::size_t>(a)].empty()) continue;
      for (int b = a + 1; b < big_l && best_upper - best_lower > tol; ++b) {
        if (champion_input[static_cast<std::size_t>(b)].empty()) continue;
        // Copies: consider() may reseat the champions mid-search.
        const std::vector<double> pa = champion_input[static_cast<std::size_t>(a)];
        const std::vector<double> pb = champion_input[static_cast<std::size_t>(b)];
        auto mix_value = [&](double rho) {
          std::vector<double> mix(pa.size());
          for (std::size_t i = 0; i < mix.size(); ++i) {
            mix[i] = (1.0 - rho) * pa[i] + rho * pb[i];
          }
          return consider(mix);
        };
        double lo = 0.0, hi = 1.0;
        double r1 = hi - gr * (hi - lo);
        double r2 = lo + gr * (hi - lo);
        double v1 = mix_value(r1);
        double v2 = mix_value(r2);
        for (int iter = 0; iter < 80 && best_upper - best_lower > tol; ++iter) {
          if (v1 >= v2) {
            hi = r2;
            r2 = r1;
            v2 = v1;
            r1 = hi - gr * (hi - lo);
            v1 = mix_value(r1);
          } else {
            lo = r1;
            r1 = r2;
            v1 = v2;
            r2 = lo + gr * (hi - lo);
            v2 = mix_value(r2);
          }
        }
      }
    }
  }

  if (best_upper - best_lower > tol) {
    std::ostringstream msg;
    msg << "compound_capacity_nofeedback bracket [" << best_lower << ", " << best_upper
        << "] did not close to " << tol;
    throw NumericError(msg.str(), best_lower, best_upper);
  }
  return best_lower;
}

}  // namespace compound
