#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace egats {

struct TraceHeader {
    std::uint64_t seed = 0;
    std::string config_hash;
    std::string env_hash;
};

// One planner iteration.
struct TraceRecord {
    std::uint64_t iteration = 0;
    std::uint64_t node = 0;
    std::optional<std::uint64_t> parent;
    std::uint64_t depth = 0;
    double tdi = 0.0;
    double horizon = 0.0;
    double evidence = 0.0;
    double context = 0.0;
    double success = 0.0;
    std::string mode;      // recon | exploit | delegate
    std::string arm;       // recon | exploit: what actually ran
    std::string action;
    std::string outcome;   // success | partial | failure
    double promise_before = 0.0;
    double promise_after = 0.0;
    bool pruned = false;
    bool pivot = false;
    std::optional<std::uint64_t> pivot_root;
    std::vector<std::uint64_t> children;
    std::uint64_t retries = 0;
    std::uint64_t budget_remaining = 0;
};

struct Trace {
    TraceHeader header;
    std::vector<TraceRecord> records;
};

// Canonical single-line JSON, keys in declaration order.
std::string to_json_line(const TraceHeader& h);
std::string to_json_line(const TraceRecord& r);

void write_trace(std::ostream& out, const Trace& trace);
std::string render_trace(const Trace& trace);

// Throws ParseError naming the first bad line (1-based). A final line
// without its terminating newline counts as truncated.
Trace parse_trace(std::string_view text);
Trace load_trace(const std::filesystem::path& path);

struct SearchMetrics {
    std::uint64_t branches_explored = 0;
    double backtrack_rate = 0.0;            // percent
    double avg_depth_before_pivot = 0.0;
    bool depth_is_max_fallback = false;     // no pivots: deepest depth reported
    std::uint64_t successful_pivots = 0;
    std::uint64_t pruned_branches = 0;
    std::uint64_t iterations = 0;
};

SearchMetrics compute_search_metrics(const Trace& trace);

std::string to_json(const SearchMetrics& m);

}  // namespace egats
