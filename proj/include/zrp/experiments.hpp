#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace zrp {

/* One experiment's machine-readable outcome: every gate appears in
 * `details` next to the tolerance it was judged against. */
struct StatReport {
  std::string name;
  bool pass = false;
  bool inconclusive = false;  // not enough data; distinct from failure
  nlohmann::json details;
};

struct SuiteResult {
  bool pass = false;
  std::vector<StatReport> reports;
  nlohmann::json master;
};

/* Experiments. Each takes its own JSON parameter block, the master seed,
 * an output directory for CSV artifacts (empty string disables files),
 * and a worker count where ensembles parallelize. RNG streams are keyed
 * by (seed, fixed experiment base + trajectory index), so results do not
 * depend on the worker count. */
StatReport exp_lln_condensate(const nlohmann::json& cfg, std::uint64_t seed,
                              const std::string& out_dir);
StatReport exp_jump_law(const nlohmann::json& cfg, std::uint64_t seed, const std::string& out_dir,
                        int threads);
StatReport exp_exit_time(const nlohmann::json& cfg, std::uint64_t seed, const std::string& out_dir,
                         int threads);
StatReport exp_levy_limit(const nlohmann::json& cfg, std::uint64_t seed,
                          const std::string& out_dir, int threads);
StatReport exp_coupling(const nlohmann::json& cfg, std::uint64_t seed, const std::string& out_dir,
                        int threads);
StatReport exp_regularization(const nlohmann::json& cfg, const std::string& out_dir);
StatReport exp_partition_shape(const nlohmann::json& cfg, const std::string& out_dir);
StatReport exp_oracle_battery(const nlohmann::json& cfg, std::uint64_t seed,
                              const std::string& out_dir);

/* the full default suite configuration (all experiments, desk-scale params) */
nlohmann::json default_suite_config();

/* a trimmed configuration for quick determinism checks */
nlohmann::json quick_suite_config();

/* Executes every experiment named in config["experiments"]; writes one CSV
 * and one JSON per experiment plus suite_report.json into out_dir.
 * Identical config and seed produce byte-identical CSV artifacts. */
SuiteResult run_suite(const nlohmann::json& config, const std::string& out_dir);

}  // namespace zrp
