#include "egats/sim.hpp"
#include "egats/tools.hpp"

#include <algorithm>
#include <sstream>

namespace egats {

namespace {

const char* const kToolDocs[] = {
#include "builtin_tools.inc"
};

ToolRegistry make_builtin() {
    ToolRegistry r;
    for (const char* doc : kToolDocs) r.register_tool(parse_tool_doc(doc));
    r.register_skill({"host_discovery",
                      {{"nmap", {{"target", ""}, {"scan_type", "discovery"}}, {"masscan"}}},
                      Aggregator::Union});
    r.register_skill({"service_scan", {{"nmap", {{"target", "{target}"}}, {"masscan"}}}, Aggregator::Union});
    r.register_skill({"vuln_scan", {{"nuclei", {{"target", "{target}"}, {"port", "{port}"}}, {"nikto"}}},
                      Aggregator::Union});
    r.register_skill({"privesc_enum", {{"linpeas", {{"target", "{target}"}}, {"winpeas"}}}, Aggregator::Union});
    return r;
}

std::string bind(const std::string& value, const std::map<std::string, std::string>& args) {
    if (value.size() > 2 && value.front() == '{' && value.back() == '}') {
        auto it = args.find(value.substr(1, value.size() - 2));
        return it == args.end() ? std::string() : it->second;
    }
    return value;
}

}  // namespace

const ToolRegistry& builtin_registry() {
    static const ToolRegistry registry = make_builtin();
    return registry;
}

std::string SimExecutor::run(const ToolSpec& spec, const Invocation& inv) {
    EnvAction a;
    a.kind = spec.action == ToolAction::Exploit ? EnvAction::Kind::Exploit : EnvAction::Kind::Recon;
    a.tool = spec.name;
    a.target.host = inv.get("target").value_or("");
    if (inv.get("scan_type") == std::optional<std::string>("discovery")) a.target.host.clear();
    // Host-level scanners enumerate every port; a port narrows other tools to one service.
    bool host_scanner = std::find(spec.output_schema.begin(), spec.output_schema.end(), "services") !=
                        spec.output_schema.end();
    auto port = inv.params.find("port");
    if (port != inv.params.end() && !host_scanner) {
        a.target.port = static_cast<int>(std::get<std::int64_t>(port->second));
    }
    if (auto v = inv.get("vulnerability")) a.params["vulnerability"] = *v;
    return env_.step(a);
}

std::string SkillResult::diagnostics() const {
    std::ostringstream os;
    for (const auto& a : attempts) {
        os << "step " << a.step + 1 << " " << a.tool << ": " << (a.ok ? "ok" : "failed");
        if (!a.diagnostic.empty()) os << " (" << a.diagnostic << ")";
        os << "\n";
    }
    return os.str();
}

SkillResult execute_skill(const Skill& skill, const ToolRegistry& registry, ToolExecutor& executor,
                          StateStore& store, const AttackTree& tree, NodeId provenance,
                          const std::map<std::string, std::string>& args) {
    SkillResult result;
    std::vector<Fact> gathered;
    for (std::size_t i = 0; i < skill.steps.size(); ++i) {
        const auto& step = skill.steps[i];
        std::vector<std::string> candidates{step.tool};
        candidates.insert(candidates.end(), step.fallbacks.begin(), step.fallbacks.end());
        bool step_ok = false;
        for (const auto& name : candidates) {
            const ToolSpec& spec = registry.tool(name);
            std::map<std::string, std::string> params;
            for (const auto& [k, v] : step.bindings) {
                if (!spec.param(k)) continue;  // fallbacks may take fewer parameters
                auto bound = bind(v, args);
                if (!bound.empty() || v.empty()) params[k] = bound;
            }
            Attempt attempt{i, name, false, ""};
            auto validated = validate_invocation(spec, params, &store);
            if (!validated.ok()) {
                std::string msg;
                for (const auto& v : validated.violations) msg += (msg.empty() ? "" : "; ") + v.parameter + ": " + v.message;
                attempt.diagnostic = msg;
                result.attempts.push_back(std::move(attempt));
                continue;
            }
            std::string raw = executor.run(spec, validated.invocation);
            result.raw += raw;
            auto parsed = parse_output(spec, raw);
            if (parsed.failed) {
                attempt.diagnostic = parsed.diagnostics.empty() ? "tool reported failure" : parsed.diagnostics.front();
                result.attempts.push_back(std::move(attempt));
                continue;
            }
            attempt.ok = true;
            result.attempts.push_back(std::move(attempt));
            if (skill.aggregator == Aggregator::LastStep) gathered.clear();
            gathered.insert(gathered.end(), parsed.facts.begin(), parsed.facts.end());
            result.evidence = strongest(result.evidence, parsed.evidence);
            result.outputs.push_back(std::move(parsed));
            step_ok = true;
            break;
        }
        if (!step_ok) {
            result.success = false;
            return result;
        }
    }
    result.success = true;
    for (auto& f : gathered) {
        f.provenance = provenance;
        auto id = store.record_fact(std::move(f), tree);
        if (std::find(result.findings.begin(), result.findings.end(), id) == result.findings.end()) {
            result.findings.push_back(id);
        }
    }
    return result;
}

}  // namespace egats
