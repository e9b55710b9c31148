#include "egats/config.hpp"
#include "egats/errors.hpp"
#include "egats/gateway.hpp"
#include "egats/planner.hpp"
#include "egats/sim.hpp"
#include "egats/sweep.hpp"
#include "egats/trace.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw egats::ConfigError("out: cannot write " + path.string());
    out << text;
}

void emit(const std::string& text, const std::string& out) {
    std::cout << text;
    if (!out.empty()) write_file(out, text);
}

std::string goal_kind(const egats::GoalSpec& g) {
    switch (g.kind) {
        case egats::GoalSpec::Kind::AllHosts: return "all_hosts";
        case egats::GoalSpec::Kind::NamedHosts: return "hosts";
        case egats::GoalSpec::Kind::Flags: return "flags";
    }
    return "";
}

struct RunArgs {
    std::string env;
    std::string config;
    std::uint64_t seed = 1;
    std::uint64_t budget = 50;
    std::string backend;
    std::string out = "egats-out";
};

int cmd_run(const RunArgs& a) {
    if (!fs::exists(a.env)) throw egats::ConfigError("env: no such file '" + a.env + "'");
    auto env = egats::load_env(a.env);
    egats::PlannerConfig config = a.config.empty() ? egats::PlannerConfig{} : egats::load_config(a.config);
    config.seed = a.seed;
    if (!a.backend.empty()) config.gateway.backend = a.backend;
    config.validate();
    if (a.budget == 0) throw egats::ConfigError("budget: must be at least 1");
    fs::create_directories(a.out);
    const fs::path out(a.out);

    const auto oracle = egats::oracle_reachable(env);
    auto report = egats::run_engagement(env, {env.goal, a.budget}, config, nullptr, (out / "trace.jsonl").string());

    json header;
    header["seed"] = a.seed;
    header["config_hash"] = report.trace.header.config_hash;
    header["env_hash"] = report.trace.header.env_hash;
    write_file(out / "tree.jsonl", header.dump() + "\n" + report.tree.export_jsonl());

    json j = header;
    j["env"] = env.name;
    j["goal"] = {{"kind", goal_kind(env.goal)}, {"names", env.goal.names}};
    j["budget"] = a.budget;
    j["iterations_used"] = report.iterations_used;
    j["goal_reached"] = report.goal_reached;
    j["frontier_exhausted"] = report.frontier_exhausted;
    j["aborted"] = report.aborted ? json(*report.aborted) : json(nullptr);
    j["compromised"] = report.compromised;
    j["flags"] = report.flags;
    j["oracle_reachable"] = oracle;
    j["metrics"] = json::parse(egats::to_json(egats::compute_search_metrics(report.trace)));
    j["trace"] = (out / "trace.jsonl").string();
    j["tree"] = (out / "tree.jsonl").string();
    write_file(out / "report.json", j.dump(2) + "\n");

    std::cout << "compromised:";
    for (const auto& h : report.compromised) std::cout << ' ' << h;
    std::cout << "\niterations: " << report.iterations_used << "/" << a.budget
              << (report.goal_reached ? "  goal reached" : "  goal not reached") << "\n";
    if (report.aborted) {
        std::cerr << "error: engagement aborted: " << *report.aborted << "\n";
        return 1;
    }
    return report.goal_reached ? 0 : 2;
}

int cmd_sweep(const std::string& suite_path, const std::string& grid_path, const std::string& config_path,
              const std::string& out, unsigned workers) {
    auto suite = egats::load_suite(suite_path);
    auto grid = egats::load_grid(grid_path);
    egats::PlannerConfig base = config_path.empty() ? egats::PlannerConfig{} : egats::load_config(config_path);
    auto table = egats::parameter_sweep(suite, grid, base, workers);
    fs::create_directories(out);
    write_file(fs::path(out) / (grid.name + ".csv"), egats::to_csv(table));
    write_file(fs::path(out) / (grid.name + ".json"), egats::to_json(table));
    std::cout << egats::render_table(table);
    return 0;
}

int cmd_metrics(const std::string& trace_path, const std::string& out) {
    auto trace = egats::load_trace(trace_path);
    json j;
    j["seed"] = trace.header.seed;
    j["config_hash"] = trace.header.config_hash;
    j["env_hash"] = trace.header.env_hash;
    j["metrics"] = json::parse(egats::to_json(egats::compute_search_metrics(trace)));
    emit(j.dump(2) + "\n", out);
    return 0;
}

int cmd_oracle(const std::string& env_path, const std::string& out) {
    auto env = egats::load_env(env_path);
    json j;
    j["env"] = env.name;
    j["env_hash"] = env.hash();
    j["reachable"] = egats::oracle_reachable(env);
    emit(j.dump(2) + "\n", out);
    return 0;
}

int cmd_generate(std::uint64_t seed, const egats::GenShape& shape, const std::string& out) {
    emit(egats::generate_env(seed, shape).to_yaml() + "\n", out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"egats: evidence-guided attack tree search over simulated networks"};
    app.require_subcommand(1);

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Run one engagement and write trace, report and tree");
    run_cmd->add_option("--env", run.env, "Environment file")->required();
    run_cmd->add_option("--config", run.config, "Planner config (YAML or JSON)");
    run_cmd->add_option("--seed", run.seed, "Seed recorded in every artifact");
    run_cmd->add_option("--budget", run.budget, "Loop iterations");
    run_cmd->add_option("--backend", run.backend, "Model backend")->check(CLI::IsMember({"stub", "http"}));
    run_cmd->add_option("--out", run.out, "Output directory");

    std::string suite, grid, sweep_config, sweep_out = "egats-sweep";
    unsigned workers = 0;
    auto* sweep_cmd = app.add_subcommand("sweep", "Grid search over an engagement suite");
    sweep_cmd->add_option("--suite", suite, "Suite file")->required();
    sweep_cmd->add_option("--grid", grid, "Grid file")->required();
    sweep_cmd->add_option("--config", sweep_config, "Base planner config");
    sweep_cmd->add_option("--out", sweep_out, "Output directory");
    sweep_cmd->add_option("--workers", workers, "Parallel engagements (0 = all cores)");

    std::string trace_path, metrics_out;
    auto* metrics_cmd = app.add_subcommand("metrics", "Search-behaviour metrics of a trace");
    metrics_cmd->add_option("--trace", trace_path, "Trace file")->required();
    metrics_cmd->add_option("--out", metrics_out, "Also write the JSON here");

    std::string oracle_env, oracle_out;
    auto* oracle_cmd = app.add_subcommand("oracle", "Hosts reachable in an environment");
    oracle_cmd->add_option("--env", oracle_env, "Environment file")->required();
    oracle_cmd->add_option("--out", oracle_out, "Also write the JSON here");

    std::uint64_t gen_seed = 1;
    egats::GenShape shape;
    std::string gen_out;
    auto* gen_cmd = app.add_subcommand("generate", "Emit a seeded random environment");
    gen_cmd->add_option("--seed", gen_seed);
    gen_cmd->add_option("--hosts", shape.hosts);
    gen_cmd->add_option("--depth", shape.chain_depth);
    gen_cmd->add_option("--decoys", shape.decoys);
    gen_cmd->add_option("--out", gen_out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*run_cmd) return cmd_run(run);
        if (*sweep_cmd) return cmd_sweep(suite, grid, sweep_config, sweep_out, workers);
        if (*metrics_cmd) return cmd_metrics(trace_path, metrics_out);
        if (*oracle_cmd) return cmd_oracle(oracle_env, oracle_out);
        if (*gen_cmd) return cmd_generate(gen_seed, shape, gen_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
