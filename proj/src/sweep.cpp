#include "egats/sweep.hpp"

#include "egats/errors.hpp"
#include "egats/planner.hpp"
#include "egats/trace.hpp"

#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace egats {

namespace {

YAML::Node load_yaml(std::string_view text, const char* what) {
    try {
        auto root = YAML::Load(std::string(text));
        if (!root.IsMap()) throw ConfigError(std::string(what) + ": expected a mapping");
        return root;
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string(what) + ": " + e.what());
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const std::vector<std::string> kParams{"w_h",         "w_e",   "w_c",       "w_s",
                                       "theta_explore", "theta_exploit", "theta_prune", "k_min",
                                       "alpha",       "c_explore", "lambda_difficulty"};

const std::vector<std::string> kMetrics{"completion", "backtrack_rate", "false_prune", "wasted", "branches"};

template <typename T>
T scalar(const YAML::Node& n, const std::string& where) {
    try {
        return n.as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError(where + ": wrong type");
    }
}

}  // namespace

SuiteSpec parse_suite(std::string_view yaml_text, const std::filesystem::path& base_dir) {
    auto root = load_yaml(yaml_text, "suite");
    SuiteSpec s;
    for (const auto& kv : root) {
        const auto key = kv.first.as<std::string>();
        if (key == "name") {
            s.name = scalar<std::string>(kv.second, "suite.name");
        } else if (key == "budget") {
            s.budget = scalar<std::uint64_t>(kv.second, "suite.budget");
        } else if (key == "seeds") {
            s.seeds = scalar<std::vector<std::uint64_t>>(kv.second, "suite.seeds");
        } else if (key == "envs") {
            for (const auto& p : scalar<std::vector<std::string>>(kv.second, "suite.envs")) {
                s.envs.push_back(load_env(base_dir / p));
            }
        } else if (key == "generated") {
            const auto& g = kv.second;
            GenShape shape;
            std::uint64_t count = 1;
            std::uint64_t seed = 1;
            for (const auto& gk : g) {
                const auto k = gk.first.as<std::string>();
                const std::string where = "suite.generated." + k;
                if (k == "count") count = scalar<std::uint64_t>(gk.second, where);
                else if (k == "seed") seed = scalar<std::uint64_t>(gk.second, where);
                else if (k == "hosts") shape.hosts = scalar<int>(gk.second, where);
                else if (k == "depth") shape.chain_depth = scalar<int>(gk.second, where);
                else if (k == "decoys") shape.decoys = scalar<int>(gk.second, where);
                else throw ConfigError(where + ": unknown key");
            }
            for (std::uint64_t i = 0; i < count; ++i) s.envs.push_back(generate_env(seed + i, shape));
        } else {
            throw ConfigError("suite." + key + ": unknown key");
        }
    }
    if (s.budget == 0) throw ConfigError("suite.budget: must be at least 1");
    if (s.seeds.empty()) throw ConfigError("suite.seeds: must not be empty");
    if (s.envs.empty()) throw ConfigError("suite: needs at least one environment");
    return s;
}

SuiteSpec load_suite(const std::filesystem::path& path) {
    return parse_suite(read_file(path), path.parent_path());
}

GridSpec parse_grid(std::string_view yaml_text) {
    auto root = load_yaml(yaml_text, "grid");
    GridSpec g;
    for (const auto& kv : root) {
        const auto key = kv.first.as<std::string>();
        if (key == "name") {
            g.name = scalar<std::string>(kv.second, "grid.name");
        } else if (key == "metrics") {
            g.metrics = scalar<std::vector<std::string>>(kv.second, "grid.metrics");
        } else if (key == "axes") {
            if (!kv.second.IsMap()) throw ConfigError("grid.axes: expected a mapping");
            for (const auto& ax : kv.second) {
                g.params.push_back(ax.first.as<std::string>());
                g.axes.push_back(scalar<std::vector<double>>(ax.second, "grid.axes." + g.params.back()));
            }
        } else if (key == "params") {
            g.params = scalar<std::vector<std::string>>(kv.second, "grid.params");
        } else if (key == "points") {
            g.points = scalar<std::vector<std::vector<double>>>(kv.second, "grid.points");
        } else {
            throw ConfigError("grid." + key + ": unknown key");
        }
    }
    if (!g.axes.empty() && !g.points.empty()) throw ConfigError("grid: give either axes or points, not both");
    for (const auto& p : g.params) {
        if (std::find(kParams.begin(), kParams.end(), p) == kParams.end()) {
            throw ConfigError("grid.params: unknown parameter '" + p + "'");
        }
    }
    if (std::set<std::string>(g.params.begin(), g.params.end()).size() != g.params.size()) {
        throw ConfigError("grid.params: duplicate parameter");
    }
    for (const auto& ax : g.axes) {
        if (ax.empty()) throw ConfigError("grid.axes: empty value list");
    }
    for (const auto& pt : g.points) {
        if (pt.size() != g.params.size()) throw ConfigError("grid.points: row width differs from params");
    }
    if (g.metrics.empty()) g.metrics = {"completion"};
    for (const auto& m : g.metrics) {
        if (std::find(kMetrics.begin(), kMetrics.end(), m) == kMetrics.end()) {
            throw ConfigError("grid.metrics: unknown metric '" + m + "'");
        }
    }
    return g;
}

GridSpec load_grid(const std::filesystem::path& path) { return parse_grid(read_file(path)); }

void apply_param(PlannerConfig& c, const std::string& name, double v) {
    if (name == "w_h") c.w_h = v;
    else if (name == "w_e") c.w_e = v;
    else if (name == "w_c") c.w_c = v;
    else if (name == "w_s") c.w_s = v;
    else if (name == "theta_explore") c.theta_explore = v;
    else if (name == "theta_exploit") c.theta_exploit = v;
    else if (name == "theta_prune") c.theta_prune = v;
    else if (name == "k_min") {
        if (v < 0 || v != static_cast<double>(static_cast<std::uint64_t>(v))) {
            throw ConfigError("k_min: must be a non-negative integer");
        }
        c.k_min = static_cast<std::uint64_t>(v);
    } else if (name == "alpha") c.alpha = v;
    else if (name == "c_explore") c.c_explore = v;
    else if (name == "lambda_difficulty") c.lambda_difficulty = v;
    else throw ConfigError("unknown sweep parameter '" + name + "'");
}

GridEnumeration enumerate_grid(const GridSpec& grid, const PlannerConfig& base) {
    std::vector<std::vector<double>> candidates;
    if (!grid.points.empty()) {
        candidates = grid.points;
    } else if (grid.params.empty()) {
        candidates.push_back({});  // the base config alone
    } else if (!grid.axes.empty()) {
        candidates.push_back({});
        for (const auto& axis : grid.axes) {
            std::vector<std::vector<double>> next;
            for (const auto& row : candidates) {
                for (double v : axis) {
                    auto r = row;
                    r.push_back(v);
                    next.push_back(std::move(r));
                }
            }
            candidates = std::move(next);
        }
    }
    GridEnumeration out;
    out.candidates = candidates.size();
    for (auto& row : candidates) {
        PlannerConfig c = base;
        try {
            for (std::size_t i = 0; i < row.size(); ++i) apply_param(c, grid.params[i], row[i]);
            c.validate();
        } catch (const ConfigError&) {
            continue;
        }
        out.feasible.push_back(std::move(row));
    }
    return out;
}

namespace {

bool tractable(const SimEnvironment& fresh, const AttackNode& n) {
    if (!n.binding.empty()) return fresh.steps_to_exploit(n.binding) != kUnreachable;
    if (n.target.host.empty()) return true;
    const auto* h = fresh.host(n.target.host);
    if (!h) return false;
    for (const auto& s : h->services) {
        if (n.target.port && s.port != *n.target.port) continue;
        for (const auto& v : s.vulnerabilities) {
            if (fresh.steps_to_exploit(v.id) != kUnreachable) return true;
        }
    }
    return false;
}

}  // namespace

RunOutcome evaluate_run(const SimEnvironment& env, const PlannerConfig& config, std::uint64_t budget) {
    SimEnvironment fresh = env;
    fresh.reset();
    SimEnvironment live = env;
    const auto oracle = oracle_reachable(fresh);
    EngagementGoal goal{env.goal, budget};
    auto report = run_engagement(live, goal, config, make_backend(config.gateway, &live, config.seed));

    RunOutcome out;
    out.goal_reached = report.goal_reached;
    std::size_t wanted = 0;
    std::size_t got = 0;
    for (const auto& h : fresh.goal_hosts()) {
        if (!oracle.count(h)) continue;
        ++wanted;
        if (report.compromised.count(h)) ++got;
    }
    out.completion = wanted == 0 ? 100.0 : 100.0 * static_cast<double>(got) / static_cast<double>(wanted);

    const auto metrics = compute_search_metrics(report.trace);
    out.backtrack_rate = metrics.backtrack_rate;
    out.branches = metrics.branches_explored;
    for (const auto& r : report.trace.records) {
        if (!r.pruned) continue;
        ++out.pruned;
        if (tractable(fresh, report.tree.node(NodeId{r.node}))) ++out.false_pruned;
    }
    for (const auto& n : report.tree.nodes()) {
        if (n.kind != NodeKind::Action || !n.parent || n.label.rfind("exploit:", 0) != 0) continue;
        const auto& parent = report.tree.node(*n.parent);
        auto ref = fresh.vulnerability(parent.binding);
        if (ref && ref->vuln->intractable) ++out.wasted;
    }
    return out;
}

SweepTable parameter_sweep(const SuiteSpec& suite, const GridSpec& grid, const PlannerConfig& base,
                           unsigned workers) {
    if (suite.envs.empty() || suite.seeds.empty()) throw ConfigError("suite: needs at least one environment and seed");
    auto grid_rows = enumerate_grid(grid, base);
    if (grid_rows.feasible.empty()) throw ConfigError("grid '" + grid.name + "': no feasible configuration");

    SweepTable table;
    table.grid = grid;
    table.suite = suite.name;
    table.base_config_hash = config_hash(base);
    table.seeds = suite.seeds;
    for (const auto& e : suite.envs) table.env_hashes.push_back(e.hash());
    table.candidates = grid_rows.candidates;

    std::vector<PlannerConfig> configs;
    for (const auto& values : grid_rows.feasible) {
        PlannerConfig c = base;
        for (std::size_t i = 0; i < values.size(); ++i) apply_param(c, grid.params[i], values[i]);
        SweepRow row;
        row.values = values;
        row.config_hash = config_hash(c);
        table.rows.push_back(std::move(row));
        configs.push_back(std::move(c));
    }

    const std::size_t per_row = suite.envs.size() * suite.seeds.size();
    const std::size_t total = configs.size() * per_row;
    std::vector<RunOutcome> results(total);
    std::atomic<std::size_t> next{0};
    std::mutex error_mu;
    std::exception_ptr error;
    auto work = [&] {
        for (std::size_t job = next++; job < total; job = next++) {
            const std::size_t row = job / per_row;
            const std::size_t env = (job % per_row) / suite.seeds.size();
            PlannerConfig c = configs[row];
            c.seed = suite.seeds[job % suite.seeds.size()];
            try {
                results[job] = evaluate_run(suite.envs[env], c, suite.budget);
            } catch (...) {
                std::lock_guard lock(error_mu);
                if (!error) error = std::current_exception();
            }
        }
    };
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, total));
    std::vector<std::thread> pool;
    for (unsigned i = 1; i < workers; ++i) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);

    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        auto& row = table.rows[r];
        std::uint64_t pruned = 0;
        std::uint64_t false_pruned = 0;
        for (std::size_t k = 0; k < per_row; ++k) {
            const auto& o = results[r * per_row + k];
            row.completion += o.completion;
            row.backtrack_rate += o.backtrack_rate;
            row.wasted += static_cast<double>(o.wasted);
            row.branches += static_cast<double>(o.branches);
            pruned += o.pruned;
            false_pruned += o.false_pruned;
        }
        const double n = static_cast<double>(per_row);
        row.runs = per_row;
        row.completion /= n;
        row.backtrack_rate /= n;
        row.wasted /= n;
        row.branches /= n;
        row.false_prune = pruned == 0 ? 0.0 : 100.0 * static_cast<double>(false_pruned) / static_cast<double>(pruned);
    }
    return table;
}

namespace {

double metric(const SweepRow& r, const std::string& name) {
    if (name == "completion") return r.completion;
    if (name == "backtrack_rate") return r.backtrack_rate;
    if (name == "false_prune") return r.false_prune;
    if (name == "wasted") return r.wasted;
    return r.branches;
}

std::string fmt(double v, int prec) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return buf;
}

std::string fmt_param(const std::string& name, double v) {
    return name == "k_min" ? fmt(v, 0) : fmt(v, 2);
}

}  // namespace

std::string to_csv(const SweepTable& t) {
    std::string out;
    for (const auto& p : t.grid.params) out += p + ",";
    for (const auto& m : t.grid.metrics) out += m + ",";
    out += "runs,config_hash\n";
    for (const auto& r : t.rows) {
        for (std::size_t i = 0; i < r.values.size(); ++i) out += fmt_param(t.grid.params[i], r.values[i]) + ",";
        for (const auto& m : t.grid.metrics) out += fmt(metric(r, m), 2) + ",";
        out += std::to_string(r.runs) + "," + r.config_hash + "\n";
    }
    return out;
}

std::string to_json(const SweepTable& t) {
    nlohmann::ordered_json j;
    j["grid"] = t.grid.name;
    j["suite"] = t.suite;
    j["seeds"] = t.seeds;
    j["base_config_hash"] = t.base_config_hash;
    j["env_hashes"] = t.env_hashes;
    j["candidates"] = t.candidates;
    j["feasible"] = t.rows.size();
    j["columns"] = t.grid.params;
    for (const auto& m : t.grid.metrics) j["columns"].push_back(m);
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : t.rows) {
        nlohmann::ordered_json row;
        for (std::size_t i = 0; i < r.values.size(); ++i) row[t.grid.params[i]] = r.values[i];
        for (const auto& m : t.grid.metrics) row[m] = metric(r, m);
        row["runs"] = r.runs;
        row["config_hash"] = r.config_hash;
        j["rows"].push_back(std::move(row));
    }
    return j.dump(2) + "\n";
}

std::string render_table(const SweepTable& t) {
    std::vector<std::string> header = t.grid.params;
    header.insert(header.end(), t.grid.metrics.begin(), t.grid.metrics.end());
    std::vector<std::vector<std::string>> cells{header};
    for (const auto& r : t.rows) {
        std::vector<std::string> line;
        for (std::size_t i = 0; i < r.values.size(); ++i) line.push_back(fmt_param(t.grid.params[i], r.values[i]));
        for (const auto& m : t.grid.metrics) line.push_back(fmt(metric(r, m), 1));
        cells.push_back(std::move(line));
    }
    std::vector<std::size_t> width(header.size(), 0);
    for (const auto& line : cells) {
        for (std::size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], line[i].size());
    }
    std::string out = t.grid.name + " on " + t.suite + ": " + std::to_string(t.rows.size()) + " of " +
                      std::to_string(t.candidates) + " configurations feasible\n";
    for (std::size_t l = 0; l < cells.size(); ++l) {
        for (std::size_t i = 0; i < cells[l].size(); ++i) {
            out += std::string(width[i] - cells[l][i].size(), ' ') + cells[l][i];
            out += i + 1 < cells[l].size() ? "  " : "\n";
        }
        if (l == 0) {
            std::size_t total = 0;
            for (auto w : width) total += w + 2;
            out += std::string(total - 2, '-') + "\n";
        }
    }
    return out;
}

}  // namespace egats
