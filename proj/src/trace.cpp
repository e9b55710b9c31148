#include "egats/trace.hpp"

#include "egats/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace egats {

using json = nlohmann::ordered_json;

namespace {

json opt(const std::optional<std::uint64_t>& v) { return v ? json(*v) : json(nullptr); }

template <typename T>
T field(const json& j, const char* key, std::size_t line) {
    if (!j.contains(key)) throw ParseError(line, std::string("missing key '") + key + "'");
    try {
        return j[key].get<T>();
    } catch (const json::exception&) {
        throw ParseError(line, std::string("bad value for '") + key + "'");
    }
}

std::optional<std::uint64_t> opt_field(const json& j, const char* key, std::size_t line) {
    if (!j.contains(key)) throw ParseError(line, std::string("missing key '") + key + "'");
    if (j[key].is_null()) return std::nullopt;
    return field<std::uint64_t>(j, key, line);
}

}  // namespace

std::string to_json_line(const TraceHeader& h) {
    json j;
    j["seed"] = h.seed;
    j["config_hash"] = h.config_hash;
    j["env_hash"] = h.env_hash;
    return j.dump();
}

std::string to_json_line(const TraceRecord& r) {
    json j;
    j["iteration"] = r.iteration;
    j["node"] = r.node;
    j["parent"] = opt(r.parent);
    j["depth"] = r.depth;
    j["tdi"] = r.tdi;
    j["horizon"] = r.horizon;
    j["evidence"] = r.evidence;
    j["context"] = r.context;
    j["success"] = r.success;
    j["mode"] = r.mode;
    j["arm"] = r.arm;
    j["action"] = r.action;
    j["outcome"] = r.outcome;
    j["promise_before"] = r.promise_before;
    j["promise_after"] = r.promise_after;
    j["pruned"] = r.pruned;
    j["pivot"] = r.pivot;
    j["pivot_root"] = opt(r.pivot_root);
    j["children"] = r.children;
    j["retries"] = r.retries;
    j["budget_remaining"] = r.budget_remaining;
    return j.dump();
}

void write_trace(std::ostream& out, const Trace& trace) {
    out << to_json_line(trace.header) << '\n';
    for (const auto& r : trace.records) out << to_json_line(r) << '\n';
}

std::string render_trace(const Trace& trace) {
    std::ostringstream os;
    write_trace(os, trace);
    return os.str();
}

Trace parse_trace(std::string_view text) {
    Trace t;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool have_header = false;
    while (pos < text.size()) {
        ++line_no;
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) throw ParseError(line_no, "truncated record (no line terminator)");
        std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        auto j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) throw ParseError(line_no, "not a JSON object");
        if (!have_header) {
            t.header.seed = field<std::uint64_t>(j, "seed", line_no);
            t.header.config_hash = field<std::string>(j, "config_hash", line_no);
            t.header.env_hash = field<std::string>(j, "env_hash", line_no);
            have_header = true;
            continue;
        }
        TraceRecord r;
        r.iteration = field<std::uint64_t>(j, "iteration", line_no);
        r.node = field<std::uint64_t>(j, "node", line_no);
        r.parent = opt_field(j, "parent", line_no);
        r.depth = field<std::uint64_t>(j, "depth", line_no);
        r.tdi = field<double>(j, "tdi", line_no);
        r.horizon = field<double>(j, "horizon", line_no);
        r.evidence = field<double>(j, "evidence", line_no);
        r.context = field<double>(j, "context", line_no);
        r.success = field<double>(j, "success", line_no);
        r.mode = field<std::string>(j, "mode", line_no);
        r.arm = field<std::string>(j, "arm", line_no);
        r.action = field<std::string>(j, "action", line_no);
        r.outcome = field<std::string>(j, "outcome", line_no);
        r.promise_before = field<double>(j, "promise_before", line_no);
        r.promise_after = field<double>(j, "promise_after", line_no);
        r.pruned = field<bool>(j, "pruned", line_no);
        r.pivot = field<bool>(j, "pivot", line_no);
        r.pivot_root = opt_field(j, "pivot_root", line_no);
        r.children = field<std::vector<std::uint64_t>>(j, "children", line_no);
        r.retries = field<std::uint64_t>(j, "retries", line_no);
        r.budget_remaining = field<std::uint64_t>(j, "budget_remaining", line_no);
        if (r.iteration != t.records.size() + 1) throw ParseError(line_no, "iteration out of sequence");
        t.records.push_back(std::move(r));
    }
    if (!have_header) throw ParseError(1, "empty trace");
    return t;
}

Trace load_trace(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open trace " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_trace(ss.str());
}

SearchMetrics compute_search_metrics(const Trace& trace) {
    SearchMetrics m;
    m.iterations = trace.records.size();
    std::map<std::uint64_t, std::optional<std::uint64_t>> parent;
    for (const auto& r : trace.records) {
        parent[r.node] = r.parent;
        for (auto c : r.children) parent.emplace(c, r.node);
    }
    auto within = [&](std::uint64_t node, std::uint64_t ancestor) {
        std::optional<std::uint64_t> cur = node;
        std::set<std::uint64_t> seen;
        while (cur && seen.insert(*cur).second) {
            if (*cur == ancestor) return true;
            auto it = parent.find(*cur);
            cur = it == parent.end() ? std::nullopt : it->second;
        }
        return false;
    };
    std::set<std::uint64_t> distinct;
    std::uint64_t backtracks = 0;
    std::uint64_t max_depth = 0;
    double pivot_depth_sum = 0.0;
    const TraceRecord* prev = nullptr;
    for (const auto& r : trace.records) {
        distinct.insert(r.node);
        if (prev && !within(r.node, prev->node)) ++backtracks;
        max_depth = std::max(max_depth, r.depth);
        if (r.pivot) {
            ++m.successful_pivots;
            pivot_depth_sum += static_cast<double>(r.depth);
        }
        if (r.pruned) ++m.pruned_branches;
        prev = &r;
    }
    m.branches_explored = distinct.size();
    m.backtrack_rate = m.iterations ? 100.0 * static_cast<double>(backtracks) / static_cast<double>(m.iterations) : 0.0;
    if (m.successful_pivots) {
        m.avg_depth_before_pivot = pivot_depth_sum / static_cast<double>(m.successful_pivots);
    } else {
        m.avg_depth_before_pivot = static_cast<double>(max_depth);
        m.depth_is_max_fallback = true;
    }
    return m;
}

std::string to_json(const SearchMetrics& m) {
    json j;
    j["branches_explored"] = m.branches_explored;
    j["backtrack_rate"] = m.backtrack_rate;
    j["avg_depth_before_pivot"] = m.avg_depth_before_pivot;
    j["avg_depth_is_max_depth"] = m.depth_is_max_fallback;
    j["successful_pivots"] = m.successful_pivots;
    j["pruned_branches"] = m.pruned_branches;
    j["iterations"] = m.iterations;
    return j.dump();
}

}  // namespace egats
