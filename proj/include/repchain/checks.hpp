#pragma once

// Pass/fail checks over finished runs, shared by the CLI and the
// acceptance harness.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "repchain/metrics.hpp"
#include "repchain/oracle.hpp"
#include "repchain/simulation.hpp"

namespace repchain {

struct CheckResult {
  std::string name;
  bool pass = true;
  std::string detail;
};

inline constexpr double kBoundSlack = 1e-9;
inline constexpr double kSlopeLow = 0.35;
inline constexpr double kSlopeHigh = 0.65;

namespace detail {

inline std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

}  // namespace detail

// Every epoch of every provider: regret <= ln u / eta + eta T / 2.
inline CheckResult check_regret_bound(const std::vector<RegretReport>& reports) {
  CheckResult c{"regret-bound", true, ""};
  double worst = -INFINITY;
  for (const auto& r : reports)
    for (const auto& e : r.epochs) {
      worst = std::max(worst, e.regret - e.bound);
      if (e.regret > e.bound + kBoundSlack && c.pass) {
        c.pass = false;
        c.detail = "provider " + std::to_string(r.provider) + " epoch " + std::to_string(e.epoch_index) + ": " +
                   detail::fmt("regret %.6f > bound %.6f", e.regret, e.bound);
      }
    }
  if (c.pass) c.detail = std::isfinite(worst) ? detail::fmt("max regret - bound = %.6f (%.0f providers)", worst,
                                                             static_cast<double>(reports.size()))
                                             : "no epochs";
  return c;
}

inline CheckResult check_properties(const RunResult& run) {
  CheckResult c{"properties", true, ""};
  auto fail = [&](const std::string& what) {
    if (c.pass) c.detail = what;
    c.pass = false;
  };
  const auto& m = run.metrics;
  if (!run.replicas_agree) fail("replica ledgers differ");
  if (m.agreement_violations) fail("agreement violations: " + std::to_string(m.agreement_violations));
  if (m.synchrony_violations) fail("synchrony violations: " + std::to_string(m.synchrony_violations));
  for (const auto& [name, count] : m.chain_violations) fail(name + " violations: " + std::to_string(count));
  if (m.forged_on_chain) fail("forged transactions on chain: " + std::to_string(m.forged_on_chain));
  if (run.conservation.violations) fail("conservation violations: " + std::to_string(run.conservation.violations));
  if (c.pass) c.detail = "ledger height " + std::to_string(run.ledger.size() - 1);
  return c;
}

// Each screening's probability of verification, recomputed by the exact
// oracle from the reputation vector rebuilt out of the log, must match the
// engine's selection distribution, and the realized verification count must
// sit within 3 sigma of its expectation. Providers with more slots than the
// oracle handles are skipped.
inline CheckResult check_oracle_agreement(const MetricsLog& log) {
  CheckResult c{"oracle-agreement", true, ""};
  std::vector<std::vector<std::int64_t>> reps;
  std::vector<std::uint64_t> epoch;
  for (auto u : log.slots) {
    reps.emplace_back(u, 0);
    epoch.push_back(0);
  }
  double sum_dev = 0.0, sum_var = 0.0, worst_prob = 0.0;
  std::size_t checked = 0;
  for (const auto& r : log.screenings) {
    const std::size_t u = log.slots.at(r.provider);
    auto& rp = reps[r.provider];
    if (r.epoch_index != epoch[r.provider]) {
      std::fill(rp.begin(), rp.end(), 0);
      epoch[r.provider] = r.epoch_index;
    }
    if (u <= oracle::kMaxSlots) {
      oracle::Instance in;
      std::vector<oracle::Cell> row;
      for (const auto& l : r.labels) row.push_back(l ? static_cast<int>(*l) : 0);
      in.labels = {row};
      in.valid = {false};
      in.eta = r.eta;
      in.initial_reps = rp;
      const double p = oracle::exact_expected_loss(in).wasted;
      double engine_p = 0.0;
      for (std::size_t k = 0; k < u; ++k)
        if (effective(r.labels[k]) == Label::Plus) engine_p += r.probs[k];
      worst_prob = std::max(worst_prob, std::abs(engine_p - p));
      sum_dev += (r.verified ? 1.0 : 0.0) - p;
      sum_var += p * (1.0 - p);
      ++checked;
    }
    if (r.verified)
      for (std::size_t k = 0; k < u; ++k)
        if (slot_mislabel(r, k)) rp[k] -= 1;
  }
  if (checked == 0) {
    c.detail = "no screenings with u <= 3";
    return c;
  }
  const double z = sum_var > 0.0 ? sum_dev / std::sqrt(sum_var) : 0.0;
  if (worst_prob > 1e-9) {
    c.pass = false;
    c.detail = detail::fmt("selection probability mismatch %.3g (screenings checked: %.0f)", worst_prob,
                           static_cast<double>(checked));
  } else if (std::abs(z) > 3.0 || (sum_var == 0.0 && sum_dev != 0.0)) {
    c.pass = false;
    c.detail = detail::fmt("verification count z = %.3f, |z| > 3 over %.0f screenings", z, static_cast<double>(checked));
  } else {
    c.detail = detail::fmt("z = %.3f over %.0f screenings", z, static_cast<double>(checked));
  }
  return c;
}

// Seed-averaged cumulative regret at each closed epoch end of one provider,
// then a single log-log fit. Only epoch ends reached by every seed count.
inline std::vector<std::pair<double, double>> averaged_cumulative_points(const std::vector<RegretReport>& per_seed) {
  std::vector<std::vector<std::pair<double, double>>> all;
  std::size_t common = SIZE_MAX;
  for (const auto& r : per_seed) {
    all.push_back(cumulative_points(r));
    common = std::min(common, all.back().size());
  }
  std::vector<std::pair<double, double>> out;
  if (all.empty()) return out;
  for (std::size_t i = 0; i < common; ++i) {
    double reg = 0.0;
    for (const auto& pts : all) reg += pts[i].second;
    out.emplace_back(all.front()[i].first, reg / static_cast<double>(all.size()));
  }
  return out;
}

inline CheckResult check_scaling(const std::vector<RegretReport>& per_seed, std::optional<double>* slope_out = nullptr) {
  CheckResult c{"scaling", true, ""};
  const auto pts = averaged_cumulative_points(per_seed);
  if (pts.size() < 4) {
    c.pass = false;
    c.detail = "need at least 4 closed epochs, have " + std::to_string(pts.size());
    return c;
  }
  const auto slope = scaling_fit(pts);
  if (slope_out) *slope_out = slope;
  if (!slope) {
    c.pass = false;
    c.detail = "slope undefined (zero regret)";
    return c;
  }
  c.pass = *slope >= kSlopeLow && *slope <= kSlopeHigh;
  c.detail = detail::fmt("slope %.4f, want [0.35, 0.65] over %.0f epochs", *slope, static_cast<double>(pts.size()));
  return c;
}

}  // namespace repchain
