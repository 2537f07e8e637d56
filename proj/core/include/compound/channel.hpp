#pragma once

#include <span>
#include <string>
#include <vector>

#include "compound/random.hpp"

namespace compound {

/// Discrete memoryless channel: a row-stochastic matrix Q(y|x) over dense
/// 0-based input/output alphabets. Construction validates; there is no way to
/// hold an invalid Dmc.
class Dmc {
 public:
  /// Validates: nonempty, rectangular, entries in [0,1], every row sums to 1
  /// within 1e-12. Throws ArgumentError naming the offending row; never
  /// renormalizes silently.
  static Dmc from_rows(std::vector<std::vector<double>> rows);

  int num_inputs() const { return static_cast<int>(rows_.size()); }
  int num_outputs() const { return num_outputs_; }
  double prob(int x, int y) const { return rows_[x][y]; }
  const std::vector<double>& row(int x) const { return rows_[x]; }
  const std::vector<std::vector<double>>& rows() const { return rows_; }

  bool operator==(const Dmc& other) const { return rows_ == other.rows_; }

 private:
  Dmc() = default;
  std::vector<std::vector<double>> rows_;
  int num_outputs_ = 0;
};

/// Binary symmetric channel [[1-p, p], [p, 1-p]], 0 <= p <= 1.
Dmc bsc(double p);

/// Binary erasure channel with erasure symbol 1: rows [[1-eps, eps, 0], [0, eps, 1-eps]].
Dmc bec(double eps);

/// Ordered finite family {Q_1..Q_L} on shared alphabets. L >= 1; members must
/// share alphabet sizes and no two members may be entry-wise identical.
class CompoundFamily {
 public:
  explicit CompoundFamily(std::vector<Dmc> members);

  int size() const { return static_cast<int>(members_.size()); }
  /// 0-based member access.
  const Dmc& channel(int ell) const { return members_[ell]; }
  int num_inputs() const { return members_[0].num_inputs(); }
  int num_outputs() const { return members_[0].num_outputs(); }

 private:
  std::vector<Dmc> members_;
};

/// Parses {"channels": [[[row],...],...]} JSON text. Errors name the channel
/// and row index that failed validation.
CompoundFamily family_from_json(const std::string& json_text);

/// Reads and parses a family JSON file.
CompoundFamily family_from_json_file(const std::string& path);

/// One channel use. Consumes exactly one engine draw.
int sample_output(const Dmc& channel, int input, std::mt19937_64& rng);

/// Memoryless block use; outputs are conditionally independent given inputs.
/// Empty input is allowed and produces an empty block.
std::vector<int> sample_block(const Dmc& channel, std::span<const int> inputs,
                              std::mt19937_64& rng);

/// In-place variant used by hot loops; resizes `out` to inputs.size().
void sample_block_into(const Dmc& channel, std::span<const int> inputs,
                       std::mt19937_64& rng, std::vector<int>& out);

}  // namespace compound
