#pragma once

#include "egats/config.hpp"
#include "egats/sim.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace egats {

// Engagement suite: explicit env files plus optionally generated ones.
struct SuiteSpec {
    std::string name = "suite";
    std::uint64_t budget = 100;
    std::vector<std::uint64_t> seeds{1};
    std::vector<SimEnvironment> envs;
};

SuiteSpec parse_suite(std::string_view yaml_text, const std::filesystem::path& base_dir = {});
SuiteSpec load_suite(const std::filesystem::path& path);

// Sweepable parameters use the config key names: w_h w_e w_c w_s
// theta_explore theta_exploit theta_prune k_min alpha c_explore
// lambda_difficulty.
// A grid is either the product of `axes` or the listed `points`.
struct GridSpec {
    std::string name = "grid";
    std::vector<std::string> params;
    std::vector<std::vector<double>> axes;     // one value list per param
    std::vector<std::vector<double>> points;   // explicit rows instead of a product
    std::vector<std::string> metrics;          // completion backtrack_rate false_prune wasted
};

GridSpec parse_grid(std::string_view yaml_text);
GridSpec load_grid(const std::filesystem::path& path);

void apply_param(PlannerConfig& config, const std::string& name, double value);

struct GridEnumeration {
    std::size_t candidates = 0;
    std::vector<std::vector<double>> feasible;
};

// Candidate rows, keeping those that pass PlannerConfig::validate when
// applied to `base`.
GridEnumeration enumerate_grid(const GridSpec& grid, const PlannerConfig& base);

struct RunOutcome {
    double completion = 0.0;      // percent of the oracle set compromised
    double backtrack_rate = 0.0;  // percent
    std::uint64_t pruned = 0;
    std::uint64_t false_pruned = 0;
    std::uint64_t wasted = 0;     // exploit attempts on decoys
    std::uint64_t branches = 0;
    bool goal_reached = false;
};

// One engagement scored against the environment's oracle.
RunOutcome evaluate_run(const SimEnvironment& env, const PlannerConfig& config, std::uint64_t budget);

struct SweepRow {
    std::vector<double> values;
    std::string config_hash;
    std::size_t runs = 0;
    double completion = 0.0;
    double backtrack_rate = 0.0;
    double false_prune = 0.0;     // percent of pruned branches that were tractable
    double wasted = 0.0;          // mean per run
    double branches = 0.0;
};

struct SweepTable {
    GridSpec grid;
    std::string suite;
    std::string base_config_hash;
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> env_hashes;
    std::size_t candidates = 0;
    std::vector<SweepRow> rows;
};

// Runs every feasible row over every (env, seed) of the suite on up to
// `workers` threads (0 = hardware concurrency). Throws ConfigError when
// no row is feasible or the suite is empty.
SweepTable parameter_sweep(const SuiteSpec& suite, const GridSpec& grid, const PlannerConfig& base,
                           unsigned workers = 0);

std::string to_csv(const SweepTable& table);
std::string to_json(const SweepTable& table);
std::string render_table(const SweepTable& table);

}  // namespace egats
