#pragma once

#include <fstream>
#include <string>

#include "json.hpp"
#include "repchain/repchain.hpp"

namespace repchain::testing {

inline nlohmann::json vectors() {
  std::ifstream in(std::string(REPCHAIN_FIXTURES) + "/vectors.json");
  return nlohmann::json::parse(in);
}

inline std::string scenario_path(const std::string& name) { return std::string(REPCHAIN_SCENARIOS) + "/" + name; }

// Small world: l providers, n collectors, m governors, every provider
// wired to every collector.
inline ScenarioConfig small_config(std::size_t l, std::size_t n, std::size_t m, std::uint64_t seed = 3) {
  ScenarioConfig c;
  c.seed = seed;
  c.l = l;
  c.n = n;
  c.m = m;
  std::vector<CollectorId> all;
  for (CollectorId k = 0; k < n; ++k) all.push_back(k);
  c.topology.assign(l, all);
  c.strategies.assign(n, CollectorStrategy{StrategyKind::Honest, 0.0});
  c.stakes.assign(m, 1);
  c.T = 20;
  c.b_limit = 50;
  c.gen_rate = 4;
  c.invalid_fraction = 0.3;
  c.total_rounds = 20;
  return c;
}

}  // namespace repchain::testing
