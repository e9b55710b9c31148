#include "egats/config.hpp"
#include "egats/errors.hpp"
#include "egats/planner.hpp"
#include "egats/sim.hpp"
#include "egats/sweep.hpp"
#include "egats/tda.hpp"
#include "egats/trace.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <vector>

namespace py = pybind11;
using namespace egats;

namespace {

std::vector<std::string> host_ids(const SimEnvironment& env) {
    std::vector<std::string> out;
    for (const auto& h : env.hosts) out.push_back(h.id);
    return out;
}

EngagementReport engage(SimEnvironment env, const PlannerConfig& config, std::uint64_t budget,
                        const std::string& trace_path) {
    py::gil_scoped_release release;
    return run_engagement(env, {env.goal, budget}, config, nullptr, trace_path);
}

}  // namespace

PYBIND11_MODULE(_egats, m) {
    m.doc() = "Evidence-guided attack tree search over simulated networks";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<NotFoundError>(m, "NotFoundError", base.ptr());
    py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
    py::register_exception<EnvironmentError>(m, "EnvironmentError", base.ptr());
    py::register_exception<ParseError>(m, "ParseError", base.ptr());
    py::register_exception<GatewayError>(m, "GatewayError", base.ptr());

    py::enum_<Mode>(m, "Mode")
        .value("RECON", Mode::Recon)
        .value("EXPLOIT", Mode::Exploit)
        .value("DELEGATE", Mode::Delegate);

    py::class_<PlannerConfig>(m, "PlannerConfig")
        .def(py::init<>())
        .def_readwrite("w_h", &PlannerConfig::w_h)
        .def_readwrite("w_e", &PlannerConfig::w_e)
        .def_readwrite("w_c", &PlannerConfig::w_c)
        .def_readwrite("w_s", &PlannerConfig::w_s)
        .def_readwrite("theta_explore", &PlannerConfig::theta_explore)
        .def_readwrite("theta_exploit", &PlannerConfig::theta_exploit)
        .def_readwrite("theta_prune", &PlannerConfig::theta_prune)
        .def_readwrite("k_min", &PlannerConfig::k_min)
        .def_readwrite("alpha", &PlannerConfig::alpha)
        .def_readwrite("c_explore", &PlannerConfig::c_explore)
        .def_readwrite("lambda_difficulty", &PlannerConfig::lambda_difficulty)
        .def_readwrite("prune_enabled", &PlannerConfig::prune_enabled)
        .def("validate", &PlannerConfig::validate)
        .def("set", [](PlannerConfig& c, const std::string& name, double v) { apply_param(c, name, v); })
        .def("hash", [](const PlannerConfig& c) { return config_hash(c); })
        .def("to_json", [](const PlannerConfig& c) { return canonical_json(c); })
        .def_static("parse", &parse_config)
        .def_static("load", &load_config);

    py::class_<TdiVector>(m, "TdiVector")
        .def(py::init<>())
        .def(py::init([](double h, double e, double c, double s) {
                 TdiVector d;
                 d.horizon_norm = h;
                 d.evidence_conf = e;
                 d.context_load = c;
                 d.success_rate = s;
                 return d;
             }),
             py::arg("horizon"), py::arg("evidence"), py::arg("context"), py::arg("success"))
        .def_readwrite("horizon_norm", &TdiVector::horizon_norm)
        .def_readwrite("evidence_conf", &TdiVector::evidence_conf)
        .def_readwrite("context_load", &TdiVector::context_load)
        .def_readwrite("success_rate", &TdiVector::success_rate)
        .def_readonly("tdi", &TdiVector::tdi);

    m.def("compute_tdi", &compute_tdi, py::arg("dims"), py::arg("config") = PlannerConfig{});
    m.def("select_mode", &select_mode, py::arg("tdi"), py::arg("config") = PlannerConfig{});

    py::class_<SimEnvironment>(m, "Environment")
        .def_static("load", &load_env)
        .def_static("parse", &parse_env)
        .def_static("generate",
                    [](std::uint64_t seed, int hosts, int depth, int decoys) {
                        return generate_env(seed, {hosts, depth, decoys});
                    },
                    py::arg("seed"), py::arg("hosts") = 5, py::arg("depth") = 3, py::arg("decoys") = 1)
        .def_readonly("name", &SimEnvironment::name)
        .def_property_readonly("hosts", &host_ids)
        .def("to_yaml", &SimEnvironment::to_yaml)
        .def("hash", &SimEnvironment::hash)
        .def("oracle_reachable", &oracle_reachable);

    py::class_<SearchMetrics>(m, "SearchMetrics")
        .def_readonly("iterations", &SearchMetrics::iterations)
        .def_readonly("branches_explored", &SearchMetrics::branches_explored)
        .def_readonly("backtrack_rate", &SearchMetrics::backtrack_rate)
        .def_readonly("avg_depth_before_pivot", &SearchMetrics::avg_depth_before_pivot)
        .def_readonly("depth_is_max_fallback", &SearchMetrics::depth_is_max_fallback)
        .def_readonly("successful_pivots", &SearchMetrics::successful_pivots)
        .def_readonly("pruned_branches", &SearchMetrics::pruned_branches);

    py::class_<Trace>(m, "Trace")
        .def_static("load", &load_trace)
        .def_static("parse", &parse_trace)
        .def("__len__", [](const Trace& t) { return t.records.size(); })
        .def("render", &render_trace)
        .def("metrics", &compute_search_metrics);

    py::class_<EngagementReport>(m, "EngagementReport")
        .def_readonly("compromised", &EngagementReport::compromised)
        .def_readonly("flags", &EngagementReport::flags)
        .def_readonly("iterations_used", &EngagementReport::iterations_used)
        .def_readonly("goal_reached", &EngagementReport::goal_reached)
        .def_readonly("frontier_exhausted", &EngagementReport::frontier_exhausted)
        .def_readonly("aborted", &EngagementReport::aborted)
        .def_readonly("trace", &EngagementReport::trace)
        .def_property_readonly("tree_jsonl", [](const EngagementReport& r) { return r.tree.export_jsonl(); })
        .def("metrics", [](const EngagementReport& r) { return compute_search_metrics(r.trace); });

    m.def("run_engagement", &engage, py::arg("env"), py::arg("config") = PlannerConfig{},
          py::arg("budget") = 100, py::arg("trace_path") = "",
          "Runs one engagement with the deterministic stub backend on a copy of env.");

    py::class_<SweepTable>(m, "SweepTable")
        .def_property_readonly("rows", [](const SweepTable& t) { return t.rows.size(); })
        .def_readonly("candidates", &SweepTable::candidates)
        .def("to_csv", [](const SweepTable& t) { return to_csv(t); })
        .def("to_json", [](const SweepTable& t) { return to_json(t); })
        .def("render", &render_table);

    m.def(
        "parameter_sweep",
        [](const std::string& suite_path, const std::string& grid_path, const PlannerConfig& base_config,
           unsigned workers) {
            auto suite = load_suite(suite_path);
            auto grid = load_grid(grid_path);
            py::gil_scoped_release release;
            return parameter_sweep(suite, grid, base_config, workers);
        },
        py::arg("suite"), py::arg("grid"), py::arg("base") = PlannerConfig{}, py::arg("workers") = 0);
}
