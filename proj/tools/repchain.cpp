// Batch scenario runner and exact-oracle front end.
//
//   repchain run --config <path> --seeds <n|s1,s2,...> --out <dir>
//                [--parallel <k>] [--checks regret-bound,scaling,properties,oracle-agreement]
//                [--overwrite]
//   repchain oracle --instance <path>
//
// Exit status: 0 when every requested check passes, 1 when a check fails,
// 2 on usage or configuration errors.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "repchain/repchain.hpp"

namespace fs = std::filesystem;
using namespace repchain;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;

const std::set<std::string> kKnownChecks{"regret-bound", "scaling", "properties", "oracle-agreement"};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::uint64_t> parse_seeds(const std::string& spec, std::uint64_t base) {
  std::vector<std::uint64_t> out;
  try {
    if (spec.find(',') == std::string::npos) {
      const auto n = std::stoull(spec);
      if (n == 0) throw UsageError("--seeds: need at least one seed");
      for (std::uint64_t i = 0; i < n; ++i) out.push_back(base + i);
    } else {
      std::stringstream ss(spec);
      std::string item;
      while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(std::stoull(item));
    }
  } catch (const std::logic_error&) {
    throw UsageError("--seeds: expected a count or a comma-separated list, got '" + spec + "'");
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::string> parse_checks(const std::string& spec) {
  std::vector<std::string> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if (!kKnownChecks.count(item)) throw UsageError("--checks: unknown check '" + item + "'");
    out.push_back(item);
  }
  return out;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

struct SeedOutcome {
  std::uint64_t seed = 0;
  RunResult result;
  std::vector<RegretReport> reports;
};

SeedOutcome run_seed(ScenarioConfig config, std::uint64_t seed, const fs::path& dir) {
  config.seed = seed;
  SeedOutcome o;
  o.seed = seed;
  o.result = run(config);
  for (ProviderId p = 0; p < config.l; ++p) o.reports.push_back(compute_regret(o.result.metrics, p));

  fs::create_directories(dir);
  std::ostringstream rounds, epochs;
  write_rounds_csv(rounds, o.result.metrics);
  write_epochs_csv(epochs, o.reports);
  write_file(dir / "rounds.csv", rounds.str());
  write_file(dir / "epochs.csv", epochs.str());
  write_file(dir / "ledger.txt", export_ledger(o.result.ledger));

  nlohmann::json summary{{"seed", seed}, {"config", config_to_json(config)}};
  summary["regret"] = nlohmann::json::array();
  for (const auto& r : o.reports) summary["regret"].push_back(to_json(r));
  summary["counters"] = counters_json(o.result.metrics);
  const auto& c = o.result.conservation;
  summary["conservation"] = {{"generated", c.generated},         {"on_chain", c.on_chain},
                             {"invalid_archive", c.invalid_archive}, {"pending", c.pending},
                             {"unverified_invalid", c.unverified_invalid}, {"violations", c.violations}};
  summary["ledger_height"] = o.result.ledger.size() - 1;
  summary["tip_hash"] = to_hex(o.result.ledger.tip_hash());
  write_file(dir / "summary.json", summary.dump(2) + "\n");
  return o;
}

nlohmann::json check_json(const CheckResult& c) { return {{"check", c.name}, {"pass", c.pass}, {"detail", c.detail}}; }

int cmd_run(const std::string& config_path, const std::string& seeds_spec, const std::string& out_dir,
            unsigned parallel, const std::string& checks_spec, bool overwrite) {
  ScenarioConfig config;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> checks;
  try {
    config = load_config(config_path);
    seeds = parse_seeds(seeds_spec, config.seed);
    checks = parse_checks(checks_spec);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  }

  const fs::path out(out_dir);
  if (fs::exists(out) && !fs::is_empty(out) && !overwrite) {
    std::cerr << "usage error: output directory " << out << " is not empty; pass --overwrite to replace it\n";
    return kExitUsage;
  }
  fs::create_directories(out);

  std::vector<SeedOutcome> outcomes(seeds.size());
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::string first_error;
  auto worker = [&] {
    for (std::size_t i; (i = next++) < seeds.size();) {
      try {
        outcomes[i] = run_seed(config, seeds[i], out / ("seed-" + std::to_string(seeds[i])));
      } catch (const std::exception& e) {
        std::lock_guard lock(err_mu);
        if (first_error.empty()) first_error = "seed " + std::to_string(seeds[i]) + ": " + e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < std::max(1u, parallel); ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (!first_error.empty()) {
    std::cerr << "run failed: " << first_error << '\n';
    return kExitCheckFailed;
  }

  nlohmann::json agg{{"config", config_path}, {"seeds", seeds}, {"checks", nlohmann::json::array()}};
  agg["runs"] = nlohmann::json::array();
  std::vector<CheckResult> results;
  for (const auto& o : outcomes) {
    nlohmann::json run_j{{"seed", o.seed}, {"ledger_height", o.result.ledger.size() - 1}};
    run_j["bounds"] = nlohmann::json::array();
    for (const auto& r : o.reports)
      for (const auto& e : r.epochs)
        run_j["bounds"].push_back({{"provider_id", r.provider},
                                   {"epoch_index", e.epoch_index},
                                   {"regret", e.regret},
                                   {"bound", e.bound},
                                   {"margin", e.bound - e.regret},
                                   {"wasted_verifications", e.wasted}});
    agg["runs"].push_back(run_j);
    for (const auto& name : checks) {
      CheckResult c;
      if (name == "regret-bound") c = check_regret_bound(o.reports);
      else if (name == "properties") c = check_properties(o.result);
      else if (name == "oracle-agreement") c = check_oracle_agreement(o.result.metrics);
      else continue;
      c.name += " [seed " + std::to_string(o.seed) + "]";
      results.push_back(c);
    }
  }
  if (std::find(checks.begin(), checks.end(), "scaling") != checks.end()) {
    for (ProviderId p = 0; p < config.l; ++p) {
      std::vector<RegretReport> per_seed;
      for (const auto& o : outcomes) per_seed.push_back(o.reports[p]);
      std::optional<double> slope;
      auto c = check_scaling(per_seed, &slope);
      c.name += " [provider " + std::to_string(p) + "]";
      results.push_back(c);
    }
  }

  bool all_pass = true;
  for (const auto& c : results) {
    agg["checks"].push_back(check_json(c));
    if (!c.pass) {
      all_pass = false;
      std::cerr << "FAIL " << c.name << ": " << c.detail << '\n';
    } else {
      std::cout << "PASS " << c.name << ": " << c.detail << '\n';
    }
  }
  agg["pass"] = all_pass;
  write_file(out / "summary.json", agg.dump(2) + "\n");
  std::cout << "wrote " << seeds.size() << " run(s) to " << out.string() << '\n';
  return all_pass ? kExitPass : kExitCheckFailed;
}

int cmd_oracle(const std::string& path) {
  oracle::Instance in;
  oracle::Expectation ex;
  try {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument(path + ": cannot open");
    in = oracle::instance_from_json(nlohmann::json::parse(f));
    ex = oracle::exact_expected_loss(in);
  } catch (const std::exception& e) {
    std::cerr << "oracle error: " << e.what() << '\n';
    return kExitUsage;
  }
  auto line = [](const char* name, double v) { std::printf("%-22s %.12g\n", name, v); };
  std::printf("%-22s %zu\n", "u", oracle::slot_count(in));
  std::printf("%-22s %zu\n", "T", in.labels.size());
  line("eta", in.eta);
  line("L_T", ex.wasted);
  line("proof_loss", ex.proof_loss);
  for (std::size_t k = 0; k < ex.slot_loss.size(); ++k) {
    const std::string name = "S_T[" + std::to_string(k + 1) + "]";
    line(name.c_str(), ex.slot_loss[k]);
  }
  line("S_T_min", ex.min_expected_slot);
  line("E[min S_T]", ex.expected_min_slot);
  const double regret = ex.wasted - ex.min_expected_slot;
  const double proof_regret = ex.proof_loss - ex.expected_min_slot;
  line("regret", regret);
  line("proof_regret", proof_regret);
  line("bound", ex.bound);
  if (regret > ex.bound + kBoundSlack || proof_regret > ex.bound + kBoundSlack) {
    std::fprintf(stderr, "check failed: regret %.12g / proof_regret %.12g > bound %.12g\n", regret, proof_regret,
                 ex.bound);
    return kExitCheckFailed;
  }
  return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical permissioned ledger simulator with reputation-based screening"};
  app.require_subcommand(1);

  std::string config_path, seeds = "1", out_dir, checks;
  unsigned parallel = 1;
  bool overwrite = false;
  auto* run_cmd = app.add_subcommand("run", "Run a scenario over one or more seeds");
  run_cmd->add_option("--config", config_path, "Scenario JSON")->required();
  run_cmd->add_option("--seeds", seeds, "Seed count (from the config seed) or comma-separated list");
  run_cmd->add_option("--out", out_dir, "Output directory")->required();
  run_cmd->add_option("--parallel", parallel, "Runs executed concurrently")->check(CLI::Range(1u, 256u));
  run_cmd->add_option("--checks", checks, "Comma-separated: regret-bound,scaling,properties,oracle-agreement");
  run_cmd->add_flag("--overwrite", overwrite, "Replace an existing output directory's files");

  std::string instance_path;
  auto* oracle_cmd = app.add_subcommand("oracle", "Exact expected loss of a small instance");
  oracle_cmd->add_option("--instance", instance_path, "Instance JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitUsage;
  }

  if (*run_cmd) return cmd_run(config_path, seeds, out_dir, parallel, checks, overwrite);
  return cmd_oracle(instance_path);
}
