// Runs the ten acceptance criteria and prints one PASS/FAIL line each.
// Usage: egats_acceptance [--allow-fail N]... [--only N]...
#include "egats/config.hpp"
#include "egats/gateway.hpp"
#include "egats/memory.hpp"
#include "egats/planner.hpp"
#include "egats/sim.hpp"
#include "egats/sweep.hpp"
#include "egats/tda.hpp"
#include "egats/tools.hpp"
#include "egats/trace.hpp"
#include "egats/tree.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace egats;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int number;
    const char* name;
    double time_limit_s;  // 0 = none
    std::function<Verdict()> run;
};

const std::string kData = EGATS_DATA_DIR;

// --- 1. TDI arithmetic --------------------------------------------------------

Verdict tdi_arithmetic() {
    AttackTree tree = AttackTree::init("lab");
    NodeId cur = tree.roots().front();
    for (Evidence e : {Evidence::Speculative, Evidence::Plausible, Evidence::Speculative, Evidence::Confirmed}) {
        NodeSpec s;
        s.kind = NodeKind::Hypothesis;
        s.evidence = e;
        cur = tree.add_child(cur, s);
    }
    const double e = path_confidence(tree, cur);
    const double e_oracle = 19.0 / 40.0;  // tenths: 3 + 5 + 3 + 8

    PlannerConfig cfg;
    TdiVector d;
    d.horizon_norm = 0.5;
    d.context_load = 0.3;
    d.success_rate = 0.5;
    d.evidence_conf = e;
    const double tdi = compute_tdi(d, cfg).tdi;
    const double tdi_oracle = 0.3 * 0.5 + 0.3 * (1 - 0.475) + 0.2 * 0.3 + 0.2 * (1 - 0.5);
    const Mode m = select_mode(tdi, cfg);

    std::ostringstream os;
    os << "E=" << e << " TDI=" << tdi << " mode=" << to_string(m);
    const bool ok = e == 0.475 && e == e_oracle && std::abs(tdi - 0.4675) <= 1e-12 &&
                    std::abs(tdi - tdi_oracle) <= 1e-12 && m == Mode::Delegate;
    return {ok, os.str()};
}

// --- 2. UCB -------------------------------------------------------------------

double textbook_ucb(double mean, std::uint64_t n, std::uint64_t total, double c) {
    return mean + c * std::sqrt(std::log(static_cast<double>(total)) / static_cast<double>(n));
}

Verdict ucb() {
    PlannerConfig cfg;
    const double v = ucb_score(0.6, 0.4, 2, 10, cfg);
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::uint64_t> visits(1, 50);
    PlannerConfig plain = cfg;
    plain.lambda_difficulty = 0.0;
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const double phi = unit(rng);
        const double tdi = unit(rng);
        const std::uint64_t n = visits(rng);
        const std::uint64_t total = n + visits(rng);
        worst = std::max(worst, std::abs(ucb_score(phi, tdi, n, total, plain) - textbook_ucb(phi, n, total, std::sqrt(2.0))));
    }
    std::ostringstream os;
    os << "fixture=" << v << " max|lambda0-ucb|=" << worst;
    return {std::abs(v - 1.9174) <= 1e-4 && worst <= 1e-9, os.str()};
}

// --- 3. promise contraction -----------------------------------------------------

Verdict promise_contraction() {
    PlannerConfig cfg;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const double phi0 = unit(rng);
        AttackTree tree = AttackTree::init("lab");
        NodeSpec s;
        s.kind = NodeKind::Hypothesis;
        s.promise = phi0;
        NodeId h = tree.add_child(tree.roots().front(), s);
        for (int k = 1; k <= 20; ++k) {
            tree.backpropagate(h, Outcome::Failure, cfg);
            const double closed = std::pow(0.7, k) * (phi0 - 0.1) + 0.1;
            worst = std::max(worst, std::abs(tree.node(h).promise - closed));
        }
    }
    std::ostringstream os;
    os << "max deviation over 50 x 20 steps=" << worst;
    return {worst <= 1e-9, os.str()};
}

// --- 4. prune gate --------------------------------------------------------------

Verdict prune_gate() {
    PlannerConfig cfg;
    const bool a = prune_eligible(0.85, 3, cfg);
    const bool b = prune_eligible(0.85, 4, cfg);
    const bool c = prune_eligible(0.75, 3, cfg);
    const bool d = prune_eligible(0.75, 4, cfg);
    // Exactly at the thresholds nothing prunes either.
    const bool edge = prune_eligible(0.8, 4, cfg) || prune_eligible(0.85, 3, cfg);
    std::ostringstream os;
    os << "(0.85,3)=" << a << " (0.85,4)=" << b << " (0.75,3)=" << c << " (0.75,4)=" << d;
    return {!a && b && !c && !d && !edge, os.str()};
}

// --- 5. oracle soundness and completeness --------------------------------------

EngagementReport engage(const SimEnvironment& def, PlannerConfig cfg, std::uint64_t seed, std::uint64_t budget) {
    SimEnvironment env = def;
    cfg.seed = seed;
    return run_engagement(env, {env.goal, budget}, cfg, make_backend(cfg.gateway, &env, seed));
}

Verdict oracle_soundness() {
    int unsound = 0;
    int complete = 0;
    int complete_runs = 0;
    for (std::uint64_t s = 1; s <= 200; ++s) {
        GenShape shape{5, static_cast<int>(1 + (s - 1) % 4), static_cast<int>((s - 1) % 3)};
        const SimEnvironment env = generate_env(s, shape);
        const auto oracle = oracle_reachable(env);
        auto r = engage(env, PlannerConfig{}, s, 100);
        for (const auto& h : r.compromised) {
            if (!oracle.count(h)) ++unsound;
        }
        if (shape.chain_depth <= 3) {
            PlannerConfig exact;
            exact.gateway.rank_correlation = 1.0;
            auto e = engage(env, exact, s, 100);
            for (const auto& h : e.compromised) {
                if (!oracle.count(h)) ++unsound;
            }
            ++complete_runs;
            if (e.compromised == oracle) ++complete;
        }
    }
    std::ostringstream os;
    os << "unsound hosts=" << unsound << " complete=" << complete << "/" << complete_runs;
    return {unsound == 0 && complete * 100 >= 95 * complete_runs, os.str()};
}

// --- 6. decoy pruning versus a depth-first baseline -----------------------------

struct DecoyStats {
    int engaged = 0;        // decoys that became prune-eligible (> k_min attempts)
    int pruned_in_time = 0;
    std::uint64_t first_decoy_attempts = 0;
    std::uint64_t branches = 0;
};

DecoyStats decoy_stats(const SimEnvironment& env, const EngagementReport& r, const PlannerConfig& cfg) {
    DecoyStats st;
    std::map<std::uint64_t, std::uint64_t> attempts;
    std::map<std::uint64_t, std::uint64_t> pruned_at;
    std::optional<std::uint64_t> first;
    for (const auto& rec : r.trace.records) {
        const auto& n = r.tree.node(NodeId{rec.node});
        auto ref = env.vulnerability(n.binding);
        if (n.binding.empty() || !ref || !ref->vuln->intractable) continue;
        if (!first) first = rec.node;
        const auto k = ++attempts[rec.node];
        if (rec.pruned && !pruned_at.count(rec.node)) pruned_at[rec.node] = k;
    }
    for (const auto& [node, k] : attempts) {
        if (k <= cfg.k_min) continue;
        ++st.engaged;
        auto it = pruned_at.find(node);
        if (it != pruned_at.end() && it->second <= cfg.k_min + 2) ++st.pruned_in_time;
    }
    if (first) st.first_decoy_attempts = attempts[*first];
    st.branches = compute_search_metrics(r.trace).branches_explored;
    return st;
}

Verdict decoy_pruning() {
    const SimEnvironment env = load_env(kData + "/envs/goadlike5.yaml");
    const std::uint64_t budget = 100;
    PlannerConfig egats;
    const PlannerConfig dfs = egats.depth_first_baseline();
    int seeds_pruned = 0, seeds_dfs_stuck = 0, seeds_wider = 0;
    int engaged = 0, in_time = 0;
    double egats_branches = 0, dfs_branches = 0;
    for (std::uint64_t s = 1; s <= 50; ++s) {
        const auto a = decoy_stats(env, engage(env, egats, s, budget), egats);
        const auto b = decoy_stats(env, engage(env, dfs, s, budget), dfs);
        engaged += a.engaged;
        in_time += a.pruned_in_time;
        if (a.pruned_in_time == a.engaged) ++seeds_pruned;
        if (b.first_decoy_attempts * 2 >= budget) ++seeds_dfs_stuck;
        if (a.branches > b.branches) ++seeds_wider;
        egats_branches += static_cast<double>(a.branches);
        dfs_branches += static_cast<double>(b.branches);
    }
    std::ostringstream os;
    os << "all engaged decoys pruned within k_min+2 in " << seeds_pruned << "/50 seeds (" << in_time << "/" << engaged
       << " decoys); dfs stuck on first decoy " << seeds_dfs_stuck << "/50; wider " << seeds_wider
       << "/50; mean branches egats " << egats_branches / 50 << " vs dfs " << dfs_branches / 50;
    return {seeds_pruned * 100 >= 95 * 50 && seeds_dfs_stuck * 100 >= 80 * 50 && seeds_wider * 100 >= 90 * 50,
            os.str()};
}

// --- 7. determinism and replay --------------------------------------------------

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Verdict replay() {
    const auto dir = std::filesystem::temp_directory_path() / "egats_acceptance_replay";
    std::filesystem::create_directories(dir);
    std::mt19937_64 rng(77);
    int identical = 0;
    for (int i = 0; i < 20; ++i) {
        const int hosts = 3 + static_cast<int>(rng() % 4);
        GenShape shape{hosts, 1 + static_cast<int>(rng() % std::min(3, hosts - 1)), static_cast<int>(rng() % 3)};
        const SimEnvironment def = generate_env(rng() % 100000, shape);
        PlannerConfig cfg;
        cfg.seed = rng() % 1000000;
        cfg.gateway.rank_correlation = std::vector<double>{0.5, 0.7, 0.9, 1.0}[rng() % 4];
        cfg.lambda_difficulty = std::vector<double>{0.0, 0.25, 0.5, 1.0}[rng() % 4];
        const std::uint64_t budget = 20 + rng() % 60;
        std::string text[2];
        for (int k = 0; k < 2; ++k) {
            SimEnvironment env = def;
            const auto path = dir / ("trace_" + std::to_string(i) + "_" + std::to_string(k) + ".jsonl");
            run_engagement(env, {env.goal, budget}, cfg, make_backend(cfg.gateway, &env, cfg.seed), path.string());
            text[k] = slurp(path);
        }
        if (!text[0].empty() && text[0] == text[1]) ++identical;
    }
    std::filesystem::remove_all(dir);
    return {identical == 20, std::to_string(identical) + "/20 manifests byte-identical"};
}

// --- 8. memory persistence under forced compression -----------------------------

std::string random_token(std::mt19937_64& rng, std::size_t len) {
    static const std::string alphabet = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789!@#$%^&*_-+=.:/\\\"' ";
    std::string s;
    for (std::size_t i = 0; i < len; ++i) s += alphabet[rng() % alphabet.size()];
    return s;
}

Verdict memory_persistence() {
    std::mt19937_64 rng(8);
    int ok_stores = 0;
    int aggressive = 0;
    std::size_t checked = 0;
    for (int trial = 0; trial < 50; ++trial) {
        AttackTree tree = AttackTree::init("lab");
        const NodeId root = tree.roots().front();
        const std::string host = "H" + std::to_string(trial);
        NodeSpec hs;
        hs.kind = NodeKind::Observation;
        hs.target.host = host;
        const NodeId hnode = tree.add_child(root, hs);
        NodeSpec vs;
        vs.kind = NodeKind::Hypothesis;
        vs.target = {host, 445};
        vs.binding = "V";
        const NodeId vnode = tree.add_child(hnode, vs);

        StateStore store;
        std::vector<std::pair<std::string, std::string>> creds;  // identity, rendered
        const int facts = 5 + static_cast<int>(rng() % 20);
        for (int f = 0; f < facts; ++f) {
            Fact fact;
            fact.provenance = (rng() % 2) ? hnode : vnode;
            const std::string scope = (rng() % 3) ? host : "H" + std::to_string(rng() % 50);
            switch (rng() % 3) {
                case 0:
                    fact.kind = FactKind::Credential;
                    fact.attributes = {{"principal", random_token(rng, 1 + rng() % 12)},
                                       {"secret", random_token(rng, rng() % 40)},
                                       {"scope", scope}};
                    break;
                case 1:
                    fact.kind = FactKind::Service;
                    fact.attributes = {{"host", scope}, {"port", std::to_string(1 + rng() % 65535)}, {"name", "svc"}};
                    break;
                default:
                    fact.kind = FactKind::Vulnerability;
                    fact.attributes = {{"id", random_token(rng, 8)}, {"status", "candidate"}, {"host", scope}};
                    break;
            }
            const FactId id = store.record_fact(fact, tree);
            if (fact.kind == FactKind::Credential) creds.emplace_back(fact.identity(), render_fact(store.fact(id)));
        }
        const int records = 4 + static_cast<int>(rng() % 8);
        for (int a = 0; a < records; ++a) {
            const NodeId at = std::vector<NodeId>{root, hnode, vnode}[rng() % 3];
            store.record_action({at, "probe", Outcome::Partial, random_token(rng, 400 + rng() % 1600), 0});
        }

        PlannerConfig wide;
        wide.context_window = 1u << 30;
        const auto raw = assemble_context(store, tree, vnode, wide).raw_token_estimate;
        PlannerConfig cfg;
        cfg.context_window = static_cast<std::uint64_t>(std::ceil(static_cast<double>(raw) / 0.72));
        const auto ctx = assemble_context(store, tree, vnode, cfg);
        if (ctx.compression == Compression::Aggressive) ++aggressive;

        bool ok = std::abs(ctx.raw_load - 0.72) < 0.005;
        for (const auto& [identity, rendered] : creds) {
            auto id = store.find(identity);
            ok = ok && id && render_fact(store.fact(*id)) == rendered;
            ++checked;
        }
        for (const auto& f : ctx.relevant_facts) {
            if (f.kind != FactKind::Credential) continue;
            auto it = std::find_if(creds.begin(), creds.end(), [&](const auto& c) { return c.first == f.identity(); });
            ok = ok && it != creds.end() && render_fact(f) == it->second;
        }
        if (ok) ++ok_stores;
    }
    std::ostringstream os;
    os << ok_stores << "/50 stores intact, " << aggressive << "/50 aggressively compressed, " << checked
       << " credentials checked";
    return {ok_stores == 50 && aggressive == 50, os.str()};
}

// --- 9. sweep harness -----------------------------------------------------------

Verdict sweep_harness() {
    const SuiteSpec suite = load_suite(kData + "/suites/generated10.yaml");
    const PlannerConfig base;
    auto shape_of = [](const SweepTable& t) {
        std::vector<std::string> cols = t.grid.params;
        cols.insert(cols.end(), t.grid.metrics.begin(), t.grid.metrics.end());
        return cols;
    };
    const auto weights = parameter_sweep(suite, load_grid(kData + "/grids/weights.yaml"), base);
    const auto thresholds = parameter_sweep(suite, load_grid(kData + "/grids/thresholds.yaml"), base);
    const auto lambda = parameter_sweep(suite, load_grid(kData + "/grids/lambda.yaml"), base);

    const bool w_ok = weights.candidates == 256 && weights.rows.size() == 44 &&
                      shape_of(weights) == std::vector<std::string>{"w_h", "w_e", "w_c", "w_s", "completion"};
    const bool t_ok = thresholds.rows.size() == 7 &&
                      shape_of(thresholds) == std::vector<std::string>{"theta_explore", "theta_exploit", "completion"};
    const bool l_ok = lambda.rows.size() == 5 &&
                      shape_of(lambda) == std::vector<std::string>{"lambda_difficulty", "completion", "backtrack_rate"};
    std::ostringstream os;
    os << "weights " << weights.rows.size() << "/" << weights.candidates << " rows, thresholds "
       << thresholds.rows.size() << " rows, lambda " << lambda.rows.size() << " rows";
    return {w_ok && t_ok && l_ok, os.str()};
}

// --- 10. evidence parsing closure ------------------------------------------------

std::string fuzz_output(std::mt19937_64& rng) {
    static const std::vector<std::string> templates{
        "Nmap scan report for {h} ({a})", "Host is up.", "{p}/tcp open {w} {w} {w}", "{p}/tcp   open  {w}",
        "Discovered open port {p}/tcp on {a} ({h})", "[{w}] [network] [{sev}] {h}:{p} [{w}] exploit-available",
        "[{w}] [http] [{sev}] {h}:{p} [{w}] version-match", "[INF] No results found on {h}:{p}",
        "[+] Session opened on {h} via {h}:{p}", "[+] Found credential {w}:{w} for {h}", "[+] Flag captured: {w}",
        "[{p}][ssh] host: {h}   login: {w}   password: {w}", "[*] Stage {p}/{p} complete on {h}:{p}: injection confirmed",
        "[-] Exploit failed: target {h}:{p} did not yield a session", "bash: {w}: command not found",
        "[-] Authentication failed for {h}:{p}: no valid credential", "[+] Interesting files found",
        "parameter '{w}' is not injectable", "{w} {w} {w}", ""};
    static const std::vector<std::string> sev{"critical", "high", "medium", "low", "info", "", "x"};
    std::string out;
    const int lines = static_cast<int>(rng() % 30);
    for (int i = 0; i < lines; ++i) {
        std::string line;
        if (rng() % 5 == 0) {
            const std::size_t n = rng() % 200;
            for (std::size_t k = 0; k < n; ++k) line += static_cast<char>(rng() % 256);
        } else {
            line = templates[rng() % templates.size()];
            std::string filled;
            for (std::size_t k = 0; k < line.size(); ++k) {
                if (line[k] == '{') {
                    const auto close = line.find('}', k);
                    const std::string key = line.substr(k + 1, close - k - 1);
                    if (key == "p") filled += std::to_string(rng() % 100000);
                    else if (key == "sev") filled += sev[rng() % sev.size()];
                    else if (key == "a") filled += std::to_string(rng() % 300) + "." + std::to_string(rng() % 300);
                    else filled += random_token(rng, rng() % 10);
                    k = close;
                } else {
                    filled += line[k];
                }
            }
            line = filled;
        }
        out += line;
        if (rng() % 10) out += "\n";
    }
    return out;
}

Verdict parsing_closure() {
    const auto& registry = builtin_registry();
    std::vector<const ToolSpec*> specs;
    for (const auto& [name, spec] : registry.tools()) specs.push_back(&spec);
    std::mt19937_64 rng(10);
    const std::set<double> allowed{1.0, 0.8, 0.5, 0.3};
    int crashes = 0, outside = 0;
    std::map<double, int> seen;
    for (int i = 0; i < 1000; ++i) {
        const std::string raw = fuzz_output(rng);
        try {
            const auto parsed = parse_output(*specs[rng() % specs.size()], raw);
            const double s = score(parsed.evidence);
            if (!allowed.count(s)) ++outside;
            ++seen[s];
        } catch (...) {
            ++crashes;
        }
    }
    std::ostringstream os;
    os << "crashes=" << crashes << " outside=" << outside << " categories:";
    for (const auto& [s, n] : seen) os << " " << s << "x" << n;
    return {crashes == 0 && outside == 0, os.str()};
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> allow_fail;
    std::set<int> only;
    for (int i = 1; i + 1 < argc; i += 2) {
        const std::string flag = argv[i];
        if (flag == "--allow-fail") allow_fail.insert(std::stoi(argv[i + 1]));
        else if (flag == "--only") only.insert(std::stoi(argv[i + 1]));
    }
    const std::vector<Criterion> criteria{
        {1, "TDI arithmetic", 1.0, tdi_arithmetic},
        {2, "UCB", 1.0, ucb},
        {3, "promise contraction", 0.0, promise_contraction},
        {4, "prune gate", 0.0, prune_gate},
        {5, "oracle soundness", 300.0, oracle_soundness},
        {6, "decoy pruning", 0.0, decoy_pruning},
        {7, "determinism/replay", 0.0, replay},
        {8, "memory persistence", 0.0, memory_persistence},
        {9, "sweep harness", 600.0, sweep_harness},
        {10, "evidence parsing closure", 0.0, parsing_closure},
    };
    int hard_failures = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && !only.count(c.number)) continue;
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.time_limit_s > 0 && secs >= c.time_limit_s) {
            v.pass = false;
            v.detail += " (over time limit)";
        }
        const bool tolerated = !v.pass && allow_fail.count(c.number);
        if (!v.pass && !tolerated) ++hard_failures;
        std::printf("[%s] %2d %-26s %7.2fs  %s%s\n", v.pass ? "PASS" : "FAIL", c.number, c.name, secs,
                    v.detail.c_str(), tolerated ? "  (known failure)" : "");
        std::fflush(stdout);
    }
    return hard_failures == 0 ? 0 : 1;
}
