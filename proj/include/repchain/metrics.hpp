#pragma once

// Loss accounting, regret reports and CSV/JSON emitters.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "repchain/types.hpp"

namespace repchain {

// One screening by a round leader, with everything needed to recompute the
// loss terms after the fact.
struct ScreeningRecord {
  std::uint64_t round = 0;
  ProviderId provider = 0;
  TxId id;
  bool valid = false;  // ground truth
  std::vector<SlotLabel> labels;
  std::vector<double> probs;
  std::size_t drawn_slot = 0;
  bool verified = false;
  std::uint64_t epoch_index = 0;
  std::uint64_t epoch_threshold = 0;
  double eta = 0.0;
};

// A slot's penalty on a verified transaction.
inline bool slot_mislabel(const ScreeningRecord& r, std::size_t k) {
  const bool plus = effective(r.labels.at(k)) == Label::Plus;
  return plus != r.valid;
}

// Loss charged by the potential argument behind the regret bound: the
// selection-weighted size of the update actually applied. Zero when the
// transaction was not verified.
inline double proof_loss(const ScreeningRecord& r) {
  if (!r.verified) return 0.0;
  double loss = 0.0;
  for (std::size_t k = 0; k < r.labels.size(); ++k)
    if (slot_mislabel(r, k)) loss += r.probs.at(k);
  return loss;
}

struct EpochClose {
  std::uint64_t round = 0;
  ProviderId provider = 0;
  std::uint64_t epoch_index = 0;
  std::vector<double> shares;
};

struct RoundRow {
  std::uint64_t round = 0;
  GovernorId leader_id = 0;
  std::uint64_t txs_screened = 0;
  std::uint64_t txs_verified = 0;
  std::uint64_t wasted_verifications = 0;
  std::uint64_t blocks = 0;
  std::uint64_t messages_pc = 0;
  std::uint64_t messages_cg = 0;
  std::uint64_t messages_gg = 0;
};

struct TxLifecycle {
  std::uint64_t generated_round = 0;
  bool valid = false;
  std::uint64_t submissions = 0;
  std::uint64_t screenings = 0;
  std::optional<std::uint64_t> on_chain_round;
  bool verified_invalid = false;
};

struct ProviderCounters {
  std::uint64_t screened = 0;
  std::uint64_t verification_calls = 0;
  std::uint64_t wasted_verifications = 0;
  double proof_loss = 0.0;
  // Penalties per slot in the current epoch; mirrors -reps.
  std::vector<std::uint64_t> epoch_penalties;
  std::uint64_t total_penalties = 0;
};

struct MetricsLog {
  std::vector<std::size_t> slots;  // u_i per provider
  std::vector<ProviderCounters> providers;
  std::vector<ScreeningRecord> screenings;
  std::vector<EpochClose> epoch_closes;
  std::vector<RoundRow> rounds;
  std::map<TxId, TxLifecycle> txs;

  std::uint64_t forgery_attempts = 0;
  std::uint64_t forgeries_rejected = 0;
  std::uint64_t forged_on_chain = 0;
  std::uint64_t bad_label_signatures = 0;
  std::uint64_t conflicting_labels = 0;
  std::uint64_t agreement_violations = 0;
  std::uint64_t synchrony_violations = 0;
  std::uint64_t max_delivery_delay = 0;
  std::uint64_t messages_feedback = 0;
  std::uint64_t stake_transfers_applied = 0;
  std::map<std::string, std::uint64_t> chain_violations;

  static MetricsLog for_topology(const std::vector<std::vector<CollectorId>>& topology) {
    MetricsLog log;
    for (const auto& adj : topology) {
      log.slots.push_back(adj.size());
      ProviderCounters c;
      c.epoch_penalties.assign(adj.size(), 0);
      log.providers.push_back(std::move(c));
    }
    return log;
  }

  void record_screening(ScreeningRecord r) {
    auto& c = providers.at(r.provider);
    ++c.screened;
    c.proof_loss += proof_loss(r);
    if (r.verified) {
      ++c.verification_calls;
      if (!r.valid) ++c.wasted_verifications;
      for (std::size_t k = 0; k < r.labels.size(); ++k)
        if (slot_mislabel(r, k)) {
          ++c.epoch_penalties[k];
          ++c.total_penalties;
        }
    }
    auto it = txs.find(r.id);
    if (it != txs.end()) {
      ++it->second.screenings;
      if (r.verified && !r.valid) it->second.verified_invalid = true;
    }
    screenings.push_back(std::move(r));
  }

  void record_epoch_close(EpochClose e) {
    auto& c = providers.at(e.provider);
    std::fill(c.epoch_penalties.begin(), c.epoch_penalties.end(), 0);
    epoch_closes.push_back(std::move(e));
  }
};

struct EpochRegret {
  std::uint64_t epoch_index = 0;
  std::uint64_t threshold = 0;  // T_i
  bool closed = false;
  std::uint64_t screened = 0;
  std::uint64_t verified = 0;
  double eta = 0.0;
  double proof_loss = 0.0;            // L_T
  std::uint64_t wasted = 0;           // invalid transactions verified
  std::vector<std::uint64_t> slot_loss;  // S_T per slot
  std::uint64_t s_min = 0;
  double regret = 0.0;               // L_T - S_T^min
  double regret_verification = 0.0;  // wasted - S_T^min
  double bound = 0.0;
  std::vector<double> revenue_shares;
};

struct RegretReport {
  ProviderId provider = 0;
  std::size_t u = 0;
  std::vector<EpochRegret> epochs;
  std::uint64_t t_total = 0;  // verified transactions over all epochs
  double cumulative_regret = 0.0;
  double cumulative_regret_verification = 0.0;
  std::optional<double> slope;
};

inline double regret_bound(std::size_t u, double eta, double T) {
  return std::log(static_cast<double>(u)) / eta + eta * T / 2.0;
}

// Least-squares slope of log(regret) against log(T_total). Undefined when
// fewer than two points or any regret is not positive.
inline std::optional<double> scaling_fit(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 2) return std::nullopt;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto [t, r] : points) {
    if (!(t > 0.0) || !(r > 0.0)) return std::nullopt;
    const double x = std::log(t), y = std::log(r);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(points.size());
  const double den = n * sxx - sx * sx;
  if (den == 0.0) return std::nullopt;
  return (n * sxy - sx * sy) / den;
}

// Cumulative regret at each closed epoch end, keyed by the summed epoch
// thresholds (T, 3T, 7T, ...).
inline std::vector<std::pair<double, double>> cumulative_points(const RegretReport& r) {
  std::vector<std::pair<double, double>> out;
  double t = 0.0, reg = 0.0;
  for (const auto& e : r.epochs) {
    if (!e.closed) break;
    t += static_cast<double>(e.threshold);
    reg += e.regret;
    out.emplace_back(t, reg);
  }
  return out;
}

inline RegretReport compute_regret(const MetricsLog& log, ProviderId provider) {
  RegretReport rep;
  rep.provider = provider;
  rep.u = log.slots.at(provider);
  std::map<std::uint64_t, EpochRegret> by_epoch;
  for (const auto& r : log.screenings) {
    if (r.provider != provider) continue;
    auto& e = by_epoch[r.epoch_index];
    if (e.slot_loss.empty()) {
      e.epoch_index = r.epoch_index;
      e.threshold = r.epoch_threshold;
      e.eta = r.eta;
      e.slot_loss.assign(rep.u, 0);
    }
    ++e.screened;
    e.proof_loss += proof_loss(r);
    if (!r.verified) continue;
    ++e.verified;
    if (!r.valid) ++e.wasted;
    for (std::size_t k = 0; k < rep.u; ++k)
      if (slot_mislabel(r, k)) ++e.slot_loss[k];
  }
  for (const auto& c : log.epoch_closes) {
    if (c.provider != provider) continue;
    auto it = by_epoch.find(c.epoch_index);
    if (it == by_epoch.end()) continue;
    it->second.closed = true;
    it->second.revenue_shares = c.shares;
  }
  for (auto& [idx, e] : by_epoch) {
    e.s_min = *std::min_element(e.slot_loss.begin(), e.slot_loss.end());
    e.regret = e.proof_loss - static_cast<double>(e.s_min);
    e.regret_verification = static_cast<double>(e.wasted) - static_cast<double>(e.s_min);
    e.bound = regret_bound(rep.u, e.eta, static_cast<double>(e.verified));
    rep.t_total += e.verified;
    rep.cumulative_regret += e.regret;
    rep.cumulative_regret_verification += e.regret_verification;
    rep.epochs.push_back(std::move(e));
  }
  auto pts = cumulative_points(rep);
  if (pts.size() >= 4) rep.slope = scaling_fit(pts);
  return rep;
}

struct LatencyStats {
  std::uint64_t valid_generated = 0;
  std::uint64_t included = 0;
  std::optional<double> median;
  std::optional<std::uint64_t> max;
};

inline LatencyStats latency_stats(const MetricsLog& log) {
  LatencyStats s;
  std::vector<std::uint64_t> lat;
  for (const auto& [id, t] : log.txs) {
    if (!t.valid) continue;
    ++s.valid_generated;
    if (!t.on_chain_round) continue;
    ++s.included;
    lat.push_back(*t.on_chain_round - t.generated_round);
  }
  if (!lat.empty()) {
    std::sort(lat.begin(), lat.end());
    const std::size_t n = lat.size();
    s.median = n % 2 ? static_cast<double>(lat[n / 2]) : (static_cast<double>(lat[n / 2 - 1]) + lat[n / 2]) / 2.0;
    s.max = lat.back();
  }
  return s;
}

// Seventeen significant digits, enough to read back the same double.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_rounds_csv(std::ostream& out, const MetricsLog& log) {
  out << "round,leader_id,txs_screened,txs_verified,wasted_verifications,blocks,messages_pc,messages_cg,messages_gg\n";
  for (const auto& r : log.rounds)
    out << r.round << ',' << r.leader_id << ',' << r.txs_screened << ',' << r.txs_verified << ','
        << r.wasted_verifications << ',' << r.blocks << ',' << r.messages_pc << ',' << r.messages_cg << ','
        << r.messages_gg << '\n';
}

inline void write_epochs_csv(std::ostream& out, const std::vector<RegretReport>& reports) {
  std::size_t max_u = 0;
  for (const auto& r : reports) max_u = std::max(max_u, r.u);
  out << "provider_id,epoch_index,T_i,eta,L_T,S_T_min,regret,bound";
  for (std::size_t k = 1; k <= max_u; ++k) out << ",revenue_share_" << k;
  out << '\n';
  for (const auto& r : reports)
    for (const auto& e : r.epochs) {
      out << r.provider << ',' << e.epoch_index << ',' << e.threshold << ',' << format_double(e.eta) << ','
          << format_double(e.proof_loss) << ',' << e.s_min << ',' << format_double(e.regret) << ',' << format_double(e.bound);
      for (std::size_t k = 0; k < max_u; ++k) {
        out << ',';
        if (k < e.revenue_shares.size()) out << format_double(e.revenue_shares[k]);
      }
      out << '\n';
    }
}

inline nlohmann::json to_json(const EpochRegret& e) {
  return {{"epoch_index", e.epoch_index},
          {"T_i", e.threshold},
          {"closed", e.closed},
          {"screened", e.screened},
          {"verified", e.verified},
          {"eta", e.eta},
          {"L_T", e.proof_loss},
          {"wasted_verifications", e.wasted},
          {"S_T", e.slot_loss},
          {"S_T_min", e.s_min},
          {"regret", e.regret},
          {"regret_verification", e.regret_verification},
          {"bound", e.bound},
          {"margin", e.bound - e.regret},
          {"revenue_shares", e.revenue_shares}};
}

inline nlohmann::json to_json(const RegretReport& r) {
  nlohmann::json j{{"provider_id", r.provider},
                   {"u", r.u},
                   {"T_total", r.t_total},
                   {"cumulative_regret", r.cumulative_regret},
                   {"cumulative_regret_verification", r.cumulative_regret_verification},
                   {"slope", r.slope ? nlohmann::json(*r.slope) : nlohmann::json(nullptr)},
                   {"epochs", nlohmann::json::array()}};
  for (const auto& e : r.epochs) j["epochs"].push_back(to_json(e));
  return j;
}

inline nlohmann::json counters_json(const MetricsLog& log) {
  nlohmann::json providers = nlohmann::json::array();
  for (std::size_t p = 0; p < log.providers.size(); ++p) {
    const auto& c = log.providers[p];
    providers.push_back({{"provider_id", p},
                         {"screened", c.screened},
                         {"verification_calls", c.verification_calls},
                         {"wasted_verifications", c.wasted_verifications},
                         {"proof_loss", c.proof_loss},
                         {"total_penalties", c.total_penalties}});
  }
  auto lat = latency_stats(log);
  return {{"providers", providers},
          {"forgery_attempts", log.forgery_attempts},
          {"forgeries_rejected", log.forgeries_rejected},
          {"forged_on_chain", log.forged_on_chain},
          {"bad_label_signatures", log.bad_label_signatures},
          {"conflicting_labels", log.conflicting_labels},
          {"agreement_violations", log.agreement_violations},
          {"synchrony_violations", log.synchrony_violations},
          {"max_delivery_delay", log.max_delivery_delay},
          {"messages_feedback", log.messages_feedback},
          {"stake_transfers_applied", log.stake_transfers_applied},
          {"chain_violations", log.chain_violations},
          {"latency",
           {{"valid_generated", lat.valid_generated},
            {"included", lat.included},
            {"median_rounds", lat.median ? nlohmann::json(*lat.median) : nlohmann::json(nullptr)},
            {"max_rounds", lat.max ? nlohmann::json(*lat.max) : nlohmann::json(nullptr)}}}};
}

}  // namespace repchain
