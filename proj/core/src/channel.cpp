#include "compound/channel.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "compound/errors.hpp"
#include "json.hpp"

namespace compound {

namespace {
constexpr double kRowSumTolerance = 1e-12;
}

Dmc Dmc::from_rows(std::vector<std::vector<double>> rows) {
  if (rows.empty()) {
    throw ArgumentError("channel matrix has no rows");
  }
  const std::size_t num_outputs = rows[0].size();
  if (num_outputs == 0) {
    throw ArgumentError("channel matrix has no columns");
  }
  for (std::size_t x = 0; x < rows.size(); ++x) {
    const auto& row = rows[x];
    if (row.size() != num_outputs) {
      throw ArgumentError("channel row " + std::to_string(x) + " has " +
                          std::to_string(row.size()) + " entries, expected " +
                          std::to_string(num_outputs));
    }
    double sum = 0.0;
    for (std::size_t y = 0; y < row.size(); ++y) {
      const double v = row[y];
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ArgumentError("channel row " + std::to_string(x) + " entry " +
                            std::to_string(y) + " is outside [0,1]");
      }
      sum += v;
    }
    if (std::fabs(sum - 1.0) > kRowSumTolerance) {
      std::ostringstream msg;
      msg << "channel row " << x << " sums to " << sum << ", expected 1 within "
          << kRowSumTolerance;
      throw ArgumentError(msg.str());
    }
  }
  Dmc dmc;
  dmc.rows_ = std::move(rows);
  dmc.num_outputs_ = static_cast<int>(num_outputs);
  return dmc;
}

Dmc bsc(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ArgumentError("bsc crossover must lie in [0,1]");
  }
  return Dmc::from_rows({{1.0 - p, p}, {p, 1.0 - p}});
}

Dmc bec(double eps) {
  if (!(eps >= 0.0 && eps <= 1.0)) {
    throw ArgumentError("bec erasure probability must lie in [0,1]");
  }
  return Dmc::from_rows({{1.0 - eps, eps, 0.0}, {0.0, eps, 1.0 - eps}});
}

CompoundFamily::CompoundFamily(std::vector<Dmc> members) : members_(std::move(members)) {
  if (members_.empty()) {
    throw ArgumentError("compound family must contain at least one channel");
  }
  const int in = members_[0].num_inputs();
  const int out = members_[0].num_outputs();
  for (std::size_t ell = 1; ell < members_.size(); ++ell) {
    if (members_[ell].num_inputs() != in || members_[ell].num_outputs() != out) {
      throw ArgumentError("family channel " + std::to_string(ell) +
                          " does not share the common alphabets");
    }
  }
  for (std::size_t a = 0; a < members_.size(); ++a) {
    for (std::size_t b = a + 1; b < members_.size(); ++b) {
      if (members_[a] == members_[b]) {
        throw ArgumentError("family channels " + std::to_string(a) + " and " +
                            std::to_string(b) + " are entry-wise identical");
      }
    }
  }
}

CompoundFamily family_from_json(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ArgumentError(std::string("family JSON parse error: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("channels") || !doc["channels"].is_array()) {
    throw ArgumentError("family JSON must be an object with a \"channels\" array");
  }
  std::vector<Dmc> members;
  const auto& channels = doc["channels"];
  for (std::size_t ell = 0; ell < channels.size(); ++ell) {
    const auto& mat = channels[ell];
    if (!mat.is_array() || mat.empty()) {
      throw ArgumentError("channel " + std::to_string(ell) + " must be a nonempty matrix");
    }
    std::vector<std::vector<double>> rows;
    for (std::size_t r = 0; r < mat.size(); ++r) {
      const auto& row = mat[r];
      if (!row.is_array() || row.empty()) {
        throw ArgumentError("channel " + std::to_string(ell) + " row " + std::to_string(r) +
                            " must be a nonempty array");
      }
      std::vector<double> vals;
      for (const auto& v : row) {
        if (!v.is_number()) {
          throw ArgumentError("channel " + std::to_string(ell) + " row " + std::to_string(r) +
                              " contains a non-numeric entry");
        }
        vals.push_back(v.get<double>());
      }
      rows.push_back(std::move(vals));
    }
    try {
      members.push_back(Dmc::from_rows(std::move(rows)));
    } catch (const ArgumentError& e) {
      throw ArgumentError("channel " + std::to_string(ell) + ": " + e.what());
    }
  }
  return CompoundFamily(std::move(members));
}

CompoundFamily family_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ArgumentError("cannot open family file: " + path);
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return family_from_json(buf.str());
}

int sample_output(const Dmc& channel, int input, std::mt19937_64& rng) {
  if (input < 0 || input >= channel.num_inputs()) {
    throw ArgumentError("sample_output input symbol out of range");
  }
  const double u = uniform01(rng);
  const auto& row = channel.row(input);
  double cum = 0.0;
  const int last = channel.num_outputs() - 1;
  for (int y = 0; y < last; ++y) {
    cum += row[y];
    if (u < cum) {
      return y;
    }
  }
  return last;
}

std::vector<int> sample_block(const Dmc& channel, std::span<const int> inputs,
                              std::mt19937_64& rng) {
  std::vector<int> out;
  sample_block_into(channel, inputs, rng, out);
  return out;
}

void sample_block_into(const Dmc& channel, std::span<const int> inputs,
                       std::mt19937_64& rng, std::vector<int>& out) {
  out.resize(inputs.size());
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    out[t] = sample_output(channel, inputs[t], rng);
  }
}

}  // namespace compound
