#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace egats {

// How the planner picks the next node. DepthFirst is the committed
// baseline: it keeps working the previously selected node while that node
// is on the frontier and otherwise takes the deepest, newest frontier node.
enum class SelectionPolicy { Ucb, DepthFirst };

// Language-model backend settings. The credential for the remote backend
// is read from the environment variable named by api_key_env.
struct GatewayConfig {
    std::string backend = "stub";          // stub | http
    std::string endpoint = "http://127.0.0.1:8000/v1/chat/completions";
    std::string model = "gpt-4o";
    std::uint64_t retries = 2;
    std::uint64_t token_budget = 0;        // 0 = unlimited
    std::string api_key_env = "EGATS_API_KEY";
    // Stub only: target Spearman correlation of horizon estimates with
    // the true distance; 1 disables noise.
    double rank_correlation = 0.7;
};

struct PlannerConfig {
    double w_h = 0.3;
    double w_e = 0.3;
    double w_c = 0.2;
    double w_s = 0.2;
    double theta_explore = 0.6;
    double theta_exploit = 0.3;
    double theta_prune = 0.8;
    std::uint64_t k_min = 3;
    double alpha = 0.7;
    double c_explore = std::sqrt(2.0);
    double lambda_difficulty = 0.5;
    double ideal_window = 0.40;
    double hard_window = 0.70;
    std::uint64_t seed = 0;

    // Model context window in tokens used for the context-load dimension.
    std::uint64_t context_window = 2048;
    bool prune_enabled = true;
    SelectionPolicy selection = SelectionPolicy::Ucb;
    GatewayConfig gateway;

    // Throws ConfigError naming the offending field.
    void validate() const;

    // Depth-first baseline: never forced into recon, no difficulty penalty,
    // no pruning, committed selection.
    PlannerConfig depth_first_baseline() const;
};

std::string_view to_string(SelectionPolicy p);

// YAML or JSON mapping with keys named after the fields. Missing keys keep
// their defaults; unknown keys are rejected.
PlannerConfig load_config(const std::filesystem::path& path);
PlannerConfig parse_config(std::string_view text);

// Canonical single-line JSON with fields in declaration order.
std::string canonical_json(const PlannerConfig& config);

// FNV-1a 64 of canonical_json, as 16 hex digits.
std::string config_hash(const PlannerConfig& config);

std::string fnv1a_hex(std::string_view bytes);

}  // namespace egats
