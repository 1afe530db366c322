#pragma once

// Scenario configuration and its JSON form. Field names match the published
// format in docs/FORMATS.md.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "repchain/nodes.hpp"

namespace repchain {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ScheduledTransfer {
  std::uint64_t round = 0;
  GovernorId from = 0;
  GovernorId to = 0;
  std::uint64_t amount = 0;

  friend bool operator==(const ScheduledTransfer&, const ScheduledTransfer&) = default;
};

struct ScenarioConfig {
  std::uint64_t seed = 0;
  std::size_t l = 1;
  std::size_t n = 1;
  std::size_t m = 1;
  std::vector<std::vector<CollectorId>> topology;
  std::vector<CollectorStrategy> strategies;
  std::vector<std::uint64_t> stakes;
  std::uint64_t T = 1;
  std::optional<double> fixed_eta;  // eta_policy; nullopt is PerEpochSqrt
  double mu = 1.0;
  std::uint64_t delta_rounds = 1;
  std::size_t b_limit = 1;
  std::uint64_t gen_rate = 0;
  double invalid_fraction = 0.0;
  std::uint64_t total_rounds = 1;
  // Optional: providers stop generating after this round (default: never),
  // leaving the remaining rounds to drain resubmissions.
  std::optional<std::uint64_t> gen_rounds;
  std::vector<ScheduledTransfer> stake_transfers;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

inline void validate(const ScenarioConfig& c) {
  auto fail = [](const std::string& field, const std::string& what) { throw ConfigError(field + ": " + what); };
  if (c.l == 0) fail("l", "need at least one provider");
  if (c.n == 0) fail("n", "need at least one collector");
  if (c.m == 0) fail("m", "need at least one governor");
  if (c.topology.size() != c.l) fail("topology", "expected one adjacency list per provider");
  for (std::size_t p = 0; p < c.topology.size(); ++p) {
    const auto& adj = c.topology[p];
    const std::string where = "topology[" + std::to_string(p) + "]";
    if (adj.empty()) fail(where, "provider has no collectors");
    if (std::set<CollectorId>(adj.begin(), adj.end()).size() != adj.size()) fail(where, "duplicate collector");
    for (auto id : adj)
      if (id >= c.n) fail(where, "collector id " + std::to_string(id) + " out of range");
  }
  if (c.strategies.size() != c.n) fail("strategies", "expected one strategy per collector");
  for (std::size_t i = 0; i < c.strategies.size(); ++i)
    if (!(c.strategies[i].q >= 0.0 && c.strategies[i].q <= 1.0))
      fail("strategies[" + std::to_string(i) + "].q", "must lie in [0, 1]");
  if (c.stakes.size() != c.m) fail("stakes", "expected one entry per governor");
  for (auto s : c.stakes)
    if (s == 0) fail("stakes", "every governor needs a positive stake");
  if (c.T == 0) fail("T", "must be positive");
  if (c.fixed_eta && !(*c.fixed_eta > 0.0 && std::isfinite(*c.fixed_eta))) fail("eta_policy", "Fixed eta must be positive");
  if (!(c.mu > 0.0 && std::isfinite(c.mu))) fail("mu", "must be positive");
  if (c.delta_rounds == 0) fail("delta_rounds", "must be at least 1");
  if (c.b_limit == 0) fail("b_limit", "must be at least 1");
  if (!(c.invalid_fraction >= 0.0 && c.invalid_fraction <= 1.0)) fail("invalid_fraction", "must lie in [0, 1]");
  if (c.total_rounds == 0) fail("total_rounds", "must be at least 1");
  if (c.gen_rounds && *c.gen_rounds > c.total_rounds) fail("gen_rounds", "exceeds total_rounds");
  for (const auto& t : c.stake_transfers)
    if (t.from >= c.m || t.to >= c.m) fail("stake_transfers", "governor id out of range");
}

namespace detail {

inline const nlohmann::json& require(const nlohmann::json& j, const char* field) {
  auto it = j.find(field);
  if (it == j.end()) throw ConfigError(std::string(field) + ": missing field");
  return *it;
}

template <typename T>
T get_as(const nlohmann::json& j, const std::string& field) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(field + ": " + e.what());
  }
}

}  // namespace detail

inline ScenarioConfig config_from_json(const nlohmann::json& j) {
  using detail::get_as;
  using detail::require;
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  ScenarioConfig c;
  c.seed = get_as<std::uint64_t>(require(j, "seed"), "seed");
  c.l = get_as<std::size_t>(require(j, "l"), "l");
  c.n = get_as<std::size_t>(require(j, "n"), "n");
  c.m = get_as<std::size_t>(require(j, "m"), "m");
  c.topology = get_as<std::vector<std::vector<CollectorId>>>(require(j, "topology"), "topology");

  const auto& strategies = require(j, "strategies");
  if (!strategies.is_array()) throw ConfigError("strategies: expected an array");
  for (std::size_t i = 0; i < strategies.size(); ++i) {
    const auto& s = strategies[i];
    const std::string where = "strategies[" + std::to_string(i) + "]";
    std::string kind_name = s.is_string() ? s.get<std::string>() : get_as<std::string>(require(s, "kind"), where + ".kind");
    auto kind = strategy_from_string(kind_name);
    if (!kind) throw ConfigError(where + ".kind: unknown strategy '" + kind_name + "'");
    CollectorStrategy cs{*kind, 0.0};
    if (s.is_object() && s.contains("q")) cs.q = get_as<double>(s["q"], where + ".q");
    else if (*kind == StrategyKind::FlipProb || *kind == StrategyKind::Withhold)
      throw ConfigError(where + ".q: missing field");
    else if (*kind == StrategyKind::Forger) cs.q = 1.0;
    c.strategies.push_back(cs);
  }

  c.stakes = get_as<std::vector<std::uint64_t>>(require(j, "stakes"), "stakes");
  c.T = get_as<std::uint64_t>(require(j, "T"), "T");

  const auto& eta = require(j, "eta_policy");
  if (eta.is_string()) {
    if (eta.get<std::string>() != "PerEpochSqrt") throw ConfigError("eta_policy: expected \"PerEpochSqrt\" or {\"Fixed\": value}");
  } else if (eta.is_object() && eta.contains("Fixed")) {
    c.fixed_eta = get_as<double>(eta["Fixed"], "eta_policy.Fixed");
  } else {
    throw ConfigError("eta_policy: expected \"PerEpochSqrt\" or {\"Fixed\": value}");
  }

  c.mu = get_as<double>(require(j, "mu"), "mu");
  c.delta_rounds = get_as<std::uint64_t>(require(j, "delta_rounds"), "delta_rounds");
  c.b_limit = get_as<std::size_t>(require(j, "b_limit"), "b_limit");
  c.gen_rate = get_as<std::uint64_t>(require(j, "gen_rate"), "gen_rate");
  c.invalid_fraction = get_as<double>(require(j, "invalid_fraction"), "invalid_fraction");
  c.total_rounds = get_as<std::uint64_t>(require(j, "total_rounds"), "total_rounds");
  if (j.contains("gen_rounds")) c.gen_rounds = get_as<std::uint64_t>(j["gen_rounds"], "gen_rounds");
  if (j.contains("stake_transfers")) {
    const auto& ts = j["stake_transfers"];
    if (!ts.is_array()) throw ConfigError("stake_transfers: expected an array");
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const std::string where = "stake_transfers[" + std::to_string(i) + "]";
      c.stake_transfers.push_back(ScheduledTransfer{get_as<std::uint64_t>(require(ts[i], "round"), where + ".round"),
                                                    get_as<GovernorId>(require(ts[i], "from"), where + ".from"),
                                                    get_as<GovernorId>(require(ts[i], "to"), where + ".to"),
                                                    get_as<std::uint64_t>(require(ts[i], "amount"), where + ".amount")});
    }
  }
  validate(c);
  return c;
}

inline nlohmann::json config_to_json(const ScenarioConfig& c) {
  nlohmann::json j;
  j["seed"] = c.seed;
  j["l"] = c.l;
  j["n"] = c.n;
  j["m"] = c.m;
  j["topology"] = c.topology;
  j["strategies"] = nlohmann::json::array();
  for (const auto& s : c.strategies)
    j["strategies"].push_back({{"kind", std::string(to_string(s.kind))}, {"q", s.q}});
  j["stakes"] = c.stakes;
  j["T"] = c.T;
  if (c.fixed_eta) j["eta_policy"] = {{"Fixed", *c.fixed_eta}};
  else j["eta_policy"] = "PerEpochSqrt";
  j["mu"] = c.mu;
  j["delta_rounds"] = c.delta_rounds;
  j["b_limit"] = c.b_limit;
  j["gen_rate"] = c.gen_rate;
  j["invalid_fraction"] = c.invalid_fraction;
  j["total_rounds"] = c.total_rounds;
  if (c.gen_rounds) j["gen_rounds"] = *c.gen_rounds;
  if (!c.stake_transfers.empty()) {
    j["stake_transfers"] = nlohmann::json::array();
    for (const auto& t : c.stake_transfers)
      j["stake_transfers"].push_back({{"round", t.round}, {"from", t.from}, {"to", t.to}, {"amount", t.amount}});
  }
  return j;
}

inline ScenarioConfig parse_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // Translate the byte offset into a line number for the diagnostic.
    std::size_t line = 1;
    for (std::size_t i = 0; i < std::min<std::size_t>(e.byte, text.size()); ++i)
      if (text[i] == '\n') ++line;
    throw ConfigError("line " + std::to_string(line) + ": " + e.what());
  }
  return config_from_json(j);
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace repchain
