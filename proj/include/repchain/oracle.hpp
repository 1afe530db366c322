#pragma once

// Exact expected losses for small single-provider instances, by expanding
// the distribution over reachable reputation vectors one transaction at a
// time. Written against the update rule directly, not the engine, so it can
// serve as the reference the engine is checked against.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace repchain::oracle {

inline constexpr std::size_t kMaxSlots = 3;
inline constexpr std::size_t kMaxTransactions = 12;

struct OracleSizeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// +1, -1, or 0 when the slot sent nothing (treated as -1).
using Cell = int;

struct Instance {
  std::vector<std::vector<Cell>> labels;  // labels[t][k]
  std::vector<bool> valid;
  double eta = 1.0;
  std::vector<std::int64_t> initial_reps;  // empty means all zero
};

struct Expectation {
  double wasted = 0.0;      // E[#invalid transactions verified]
  double proof_loss = 0.0;  // E[sum of selection-weighted penalties]
  std::vector<double> slot_loss;  // E[S_k]
  double min_expected_slot = 0.0;  // min_k E[S_k]
  double expected_min_slot = 0.0;  // E[min_k S_k]
  double bound = 0.0;
  std::size_t reachable_states = 0;  // at the end
};

inline std::size_t slot_count(const Instance& in) { return in.labels.empty() ? in.initial_reps.size() : in.labels.front().size(); }

inline void check_size(const Instance& in) {
  const std::size_t u = slot_count(in);
  if (u == 0 || u > kMaxSlots || in.labels.size() > kMaxTransactions)
    throw OracleSizeError("oracle instance too large: need 1 <= u <= " + std::to_string(kMaxSlots) +
                          " and T <= " + std::to_string(kMaxTransactions) + ", got u = " + std::to_string(u) +
                          ", T = " + std::to_string(in.labels.size()));
  if (in.valid.size() != in.labels.size()) throw std::invalid_argument("oracle: validity vector length differs from T");
  for (const auto& row : in.labels) {
    if (row.size() != u) throw std::invalid_argument("oracle: ragged label matrix");
    for (auto c : row)
      if (c != 1 && c != -1 && c != 0) throw std::invalid_argument("oracle: labels must be +1, -1 or absent");
  }
  if (!in.initial_reps.empty() && in.initial_reps.size() != u)
    throw std::invalid_argument("oracle: initial_reps length differs from u");
  if (!(in.eta > 0.0)) throw std::invalid_argument("oracle: eta must be positive");
}

inline Expectation exact_expected_loss(const Instance& in) {
  check_size(in);
  const std::size_t u = slot_count(in);
  const std::size_t T = in.labels.size();
  std::vector<std::int64_t> start = in.initial_reps.empty() ? std::vector<std::int64_t>(u, 0) : in.initial_reps;

  Expectation out;
  out.slot_loss.assign(u, 0.0);
  std::map<std::vector<std::int64_t>, double> states{{start, 1.0}};
  for (std::size_t t = 0; t < T; ++t) {
    const auto& row = in.labels[t];
    const bool valid = in.valid[t];
    std::map<std::vector<std::int64_t>, double> next;
    for (const auto& [reps, mass] : states) {
      double z = 0.0;
      std::vector<double> w(u);
      const auto top = *std::max_element(reps.begin(), reps.end());
      for (std::size_t k = 0; k < u; ++k) {
        w[k] = std::exp(in.eta * static_cast<double>(reps[k] - top));
        z += w[k];
      }
      double p_plus = 0.0;
      double weighted_penalty = 0.0;
      for (std::size_t k = 0; k < u; ++k) {
        const double pk = mass * w[k] / z;
        const bool plus = row[k] == 1;
        if (plus) p_plus += pk;
        if (plus != valid) weighted_penalty += w[k] / z;
      }
      // Loss is charged only when the transaction is verified.
      out.proof_loss += p_plus * weighted_penalty;
      if (!valid) out.wasted += p_plus;
      // Every +1 draw leads to the same verified transition; every other
      // draw leaves the vector unchanged.
      if (p_plus > 0.0) {
        auto after = reps;
        for (std::size_t k = 0; k < u; ++k)
          if ((row[k] == 1) != valid) after[k] -= 1;
        next[after] += p_plus;
      }
      if (mass - p_plus > 0.0) next[reps] += mass - p_plus;
    }
    states = std::move(next);
  }

  for (const auto& [reps, mass] : states) {
    std::int64_t lo = start[0] - reps[0];
    for (std::size_t k = 0; k < u; ++k) {
      const auto s = start[k] - reps[k];
      out.slot_loss[k] += mass * static_cast<double>(s);
      lo = std::min(lo, s);
    }
    out.expected_min_slot += mass * static_cast<double>(lo);
  }
  out.min_expected_slot = *std::min_element(out.slot_loss.begin(), out.slot_loss.end());
  out.bound = std::log(static_cast<double>(u)) / in.eta + in.eta * static_cast<double>(T) / 2.0;
  out.reachable_states = states.size();
  return out;
}

// {"labels": [[1, -1], ...], "valid": [false, ...], "eta": 0.5,
//  "initial_reps": [0, 0]}. Absent labels are null or 0. eta defaults to
// sqrt(ln u / T).
inline Instance instance_from_json(const nlohmann::json& j) {
  Instance in;
  for (const auto& row : j.at("labels")) {
    std::vector<Cell> r;
    for (const auto& c : row) r.push_back(c.is_null() ? 0 : c.get<int>());
    in.labels.push_back(std::move(r));
  }
  for (const auto& v : j.at("valid")) in.valid.push_back(v.get<bool>());
  if (j.contains("initial_reps")) in.initial_reps = j["initial_reps"].get<std::vector<std::int64_t>>();
  const std::size_t u = slot_count(in);
  if (j.contains("eta")) {
    in.eta = j["eta"].get<double>();
  } else {
    const double T = static_cast<double>(std::max<std::size_t>(in.labels.size(), 1));
    in.eta = u > 1 ? std::sqrt(std::log(static_cast<double>(u)) / T) : 1.0;
  }
  return in;
}

}  // namespace repchain::oracle
