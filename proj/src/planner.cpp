#include "egats/planner.hpp"

#include "egats/errors.hpp"
#include "egats/search.hpp"
#include "egats/tda.hpp"

#include <algorithm>
#include <fstream>

namespace egats {

namespace {

std::string mode_name(Mode m) { return std::string(to_string(m)); }

std::string outcome_name(Outcome o) { return std::string(to_string(o)); }

std::vector<NodeId> pruned_nodes(const AttackTree& tree) {
    std::vector<NodeId> out;
    for (const auto& n : tree.nodes()) {
        if (n.pruned) out.push_back(n.id);
    }
    return out;
}

}  // namespace

void EngagementGoal::validate() const {
    if (budget == 0) throw ConfigError("budget: must be at least 1");
    if (spec.kind != GoalSpec::Kind::AllHosts && spec.names.empty()) {
        throw ConfigError("goal: named goal without names");
    }
}

Planner::Planner(SimEnvironment& env, EngagementGoal goal, PlannerConfig config, std::shared_ptr<Backend> backend)
    : env_(env),
      goal_(std::move(goal)),
      config_(std::move(config)),
      gateway_(std::move(backend), config_.gateway.retries, config_.gateway.token_budget),
      registry_(builtin_registry()),
      executor_(env),
      tree_(AttackTree::init(env.name.empty() ? "network" : env.name)),
      budget_left_(goal_.budget) {
    goal_.validate();
    config_.validate();
    env_.reset();
    tree_.node_mut(tree_.roots().front()).state_ref = store_.take_snapshot(tree_, tree_.roots().front());
    trace_.header = {config_.seed, config_hash(config_), env_.hash()};
}

NodeId Planner::add_node(std::optional<NodeId> parent, NodeSpec spec) {
    NodeId id = parent ? tree_.add_child(*parent, std::move(spec)) : tree_.add_root(std::move(spec));
    tree_.node_mut(id).state_ref = store_.take_snapshot(tree_, id);
    return id;
}

NodeId Planner::record_action(NodeId node, const std::string& action, Outcome outcome, Evidence evidence,
                              const std::string& output) {
    store_.record_action({node, action, outcome, output, 0});
    NodeSpec spec;
    spec.kind = NodeKind::Action;
    spec.promise = tree_.node(node).promise;
    spec.evidence = evidence;
    spec.target = tree_.node(node).target;
    spec.label = action;
    NodeId id = tree_.add_child(node, std::move(spec));
    auto& a = tree_.node_mut(id);
    a.outcome = outcome;
    a.resolved = true;
    tree_.backpropagate(id, outcome, config_);
    last_action_ = id;
    return id;
}

std::pair<std::uint64_t, std::uint64_t> Planner::branch_counts(NodeId node) const {
    std::uint64_t successes = 0;
    std::uint64_t attempts = 0;
    for (NodeId id : tree_.subtree(node)) {
        const auto& n = tree_.node(id);
        if (n.kind != NodeKind::Action || !n.outcome) continue;
        ++attempts;
        if (*n.outcome == Outcome::Success) ++successes;
    }
    return {successes, attempts};
}

TdiVector Planner::dims_for(NodeId node, const std::map<NodeId, double>& raw,
                            const std::map<NodeId, double>& normalized) {
    TdiVector d;
    d.horizon_raw = raw.at(node);
    d.horizon_norm = normalized.at(node);
    auto [s, a] = branch_counts(node);
    d.success_rate = success_rate(s, a);
    const auto ctx = assemble_context(store_, tree_, node, config_);
    d.context_load = context_load(ctx.raw_token_estimate, config_.context_window);
    // The agent stands on the latest attempt once a node has been tried.
    NodeId tip = node;
    for (NodeId c : tree_.children(node)) {
        if (tree_.node(c).kind == NodeKind::Action) tip = c;
    }
    d.evidence_conf = path_confidence(tree_, tip);
    return compute_tdi(d, config_);
}

void Planner::refresh_difficulty() {
    const auto frontier = tree_.frontier();
    if (frontier.empty()) return;
    std::vector<BranchInfo> branches;
    for (NodeId id : frontier) {
        const auto& n = tree_.node(id);
        branches.push_back({id, n.kind, n.target, n.binding, !n.parent.has_value()});
    }
    const auto raw = gateway_.horizon(branches);
    std::map<NodeId, double> normalized;
    for (NodeId id : frontier) normalized[id] = normalize_horizon(raw, id);
    for (NodeId id : frontier) {
        auto dims = dims_for(id, raw, normalized);
        auto& n = tree_.node_mut(id);
        n.dims = dims;
        n.tdi = dims.tdi;
        n.tdi_stale = false;
    }
    difficulty_fresh_ = true;
}

std::set<std::string> Planner::compromised() const {
    std::set<std::string> out;
    for (const auto& f : store_.facts()) {
        if (f.kind == FactKind::Session) out.insert(f.host());
    }
    return out;
}

bool Planner::goal_reached() const {
    const auto& g = goal_.spec;
    if (g.kind == GoalSpec::Kind::Flags) {
        std::set<std::string> have;
        for (const auto& f : store_.facts()) {
            if (f.kind == FactKind::Vulnerability && !f.attr("flag").empty()) have.insert(f.attr("flag"));
        }
        return std::all_of(g.names.begin(), g.names.end(), [&](const std::string& n) { return have.count(n) > 0; });
    }
    const auto done = compromised();
    if (g.kind == GoalSpec::Kind::AllHosts) {
        return std::all_of(env_.hosts.begin(), env_.hosts.end(),
                           [&](const SimHost& h) { return done.count(h.id) > 0; });
    }
    return std::all_of(g.names.begin(), g.names.end(), [&](const std::string& n) { return done.count(n) > 0; });
}

std::vector<NodeId> Planner::execute_recon(NodeId n) {
    if (tree_.node(n).pruned) throw ContractViolation("recon on pruned node " + std::to_string(n.value));
    if (tree_.node(n).kind == NodeKind::Action) throw ContractViolation("recon on an action node");
    const AttackNode node = tree_.node(n);
    std::vector<NodeId> created;
    std::string action;
    SkillResult res;
    Outcome outcome = Outcome::Partial;

    auto has_child = [&](auto pred) {
        const auto& kids = tree_.children(n);
        return std::any_of(kids.begin(), kids.end(), [&](NodeId c) { return pred(tree_.node(c)); });
    };

    if (node.kind == NodeKind::Observation && node.target.host.empty()) {
        action = "recon:host_discovery";
        res = execute_skill(registry_.skill("host_discovery"), registry_, executor_, store_, tree_, n, {});
        if (res.success) {
            for (FactId fid : res.findings) {
                const auto& f = store_.fact(fid);
                if (f.kind != FactKind::Host) continue;
                const std::string host = f.host();
                if (has_child([&](const AttackNode& c) { return c.target.host == host; })) continue;
                NodeSpec spec;
                spec.kind = NodeKind::Observation;
                spec.evidence = Evidence::Speculative;
                spec.promise = gateway_.promise_init(spec.evidence);
                spec.target.host = host;
                spec.label = "host " + host;
                created.push_back(add_node(n, std::move(spec)));
            }
        }
    } else if (node.kind == NodeKind::Observation && !node.target.port && !node.parent) {
        // Pivot root: enumerate the foothold itself.
        action = "recon:privesc_enum";
        res = execute_skill(registry_.skill("privesc_enum"), registry_, executor_, store_, tree_, n,
                            {{"target", node.target.host}});
        tree_.node_mut(n).resolved = true;
    } else if (node.kind == NodeKind::Observation && !node.target.port) {
        action = "recon:service_scan";
        res = execute_skill(registry_.skill("service_scan"), registry_, executor_, store_, tree_, n,
                            {{"target", node.target.host}});
        if (res.success) {
            std::vector<ServiceInfo> services;
            for (FactId fid : store_.facts_of(FactKind::Service)) {
                const auto& f = store_.fact(fid);
                if (f.attr("host") != node.target.host) continue;
                services.push_back({std::stoi(f.attr("port")), f.attr("name"), f.attr("version")});
            }
            std::sort(services.begin(), services.end(),
                      [](const ServiceInfo& a, const ServiceInfo& b) { return a.port < b.port; });
            const auto proposals = gateway_.expand(node.target.host, services);
            for (const auto& svc : services) {
                bool any = false;
                for (const auto& p : proposals) {
                    if (p.port != svc.port) continue;
                    any = true;
                    if (has_child([&](const AttackNode& c) { return c.binding == p.vulnerability; })) continue;
                    NodeSpec spec;
                    spec.kind = NodeKind::Hypothesis;
                    spec.evidence = svc.version.empty() ? Evidence::Speculative : Evidence::Plausible;
                    spec.promise = gateway_.promise_init(spec.evidence);
                    spec.target = {node.target.host, svc.port};
                    spec.binding = p.vulnerability;
                    spec.tool = p.tool;
                    spec.label = p.vulnerability + " on " + node.target.host + ":" + std::to_string(svc.port);
                    spec.preconditions = p.preconditions;
                    created.push_back(add_node(n, std::move(spec)));
                }
                if (any) continue;
                if (has_child([&](const AttackNode& c) { return c.target.port == svc.port; })) continue;
                NodeSpec spec;
                spec.kind = NodeKind::Observation;
                spec.evidence = Evidence::Speculative;
                spec.promise = gateway_.promise_init(spec.evidence);
                spec.target = {node.target.host, svc.port};
                spec.label = svc.name + " on " + node.target.host + ":" + std::to_string(svc.port);
                created.push_back(add_node(n, std::move(spec)));
            }
        }
        if (created.empty()) tree_.node_mut(n).resolved = true;
    } else {
        action = "recon:vuln_scan";
        res = execute_skill(registry_.skill("vuln_scan"), registry_, executor_, store_, tree_, n,
                            {{"target", node.target.host}, {"port", std::to_string(*node.target.port)}});
        if (res.success && node.kind == NodeKind::Hypothesis) {
            Evidence found = node.evidence;
            for (const auto& out : res.outputs) {
                for (const auto& f : out.facts) {
                    if (f.kind != FactKind::Vulnerability || f.attr("id") != node.binding) continue;
                    found = strongest(found, f.attr("status") == "exploitable" ? Evidence::Confirmed
                                                                                 : Evidence::Plausible);
                }
            }
            if (score(found) > score(node.evidence)) {
                tree_.node_mut(n).evidence = found;
                outcome = Outcome::Success;
            }
        } else if (node.kind == NodeKind::Observation) {
            tree_.node_mut(n).resolved = true;
        }
    }

    if (!res.success) {
        outcome = Outcome::Failure;
    } else if (!created.empty()) {
        outcome = Outcome::Success;
    }
    std::string output = res.raw;
    if (!res.success) output += res.diagnostics();
    record_action(n, action, outcome, res.evidence, output);
    return created;
}

ExploitResult Planner::execute_exploit(NodeId n) {
    const AttackNode& node = tree_.node(n);
    if (node.kind != NodeKind::Hypothesis || node.binding.empty()) {
        throw ContractViolation("exploit needs a bound hypothesis, got node " + std::to_string(n.value));
    }
    if (node.pruned || node.resolved) throw ContractViolation("exploit on a pruned or resolved node");
    ExploitResult result;
    const std::string host = node.target.host;
    const std::string tool = node.tool.empty() ? "metasploit" : node.tool;
    const std::string action = "exploit:" + tool;

    for (auto& p : tree_.node_mut(n).preconditions) p.matched = store_.satisfies(p.pattern);
    for (const auto& p : tree_.node(n).preconditions) {
        if (!p.matched) result.violations.push_back("precondition " + p.pattern.str() + " not satisfied");
    }
    std::map<std::string, std::string> params{{"target", host}, {"vulnerability", node.binding}};
    if (node.target.port) params["port"] = std::to_string(*node.target.port);
    const ToolSpec* spec = registry_.find(tool);
    if (!spec) {
        result.violations.push_back("tool: no tool '" + tool + "'");
    } else {
        for (const auto& v : validate_invocation(*spec, params, &store_).violations) {
            result.violations.push_back(v.parameter + ": " + v.message);
        }
    }
    if (!result.violations.empty()) {
        std::string output = "validation failed before execution:\n";
        for (const auto& v : result.violations) output += "  " + v + "\n";
        result.outcome = Outcome::Failure;
        record_action(n, action, Outcome::Failure, Evidence::Speculative, output);
        return result;
    }

    result.executed = true;
    Skill skill{"exploit", {{tool, params, {}}}, Aggregator::Union};
    auto res = execute_skill(skill, registry_, executor_, store_, tree_, n, {});
    std::vector<FactId> credentials;
    bool session = false;
    for (FactId fid : res.findings) {
        const auto& f = store_.fact(fid);
        if (f.kind == FactKind::Credential) credentials.push_back(fid);
        if (f.kind == FactKind::Session && f.host() == host) session = true;
    }
    if (!res.success) {
        result.outcome = Outcome::Failure;
    } else if (session) {
        result.outcome = Outcome::Success;
    } else {
        result.outcome = Outcome::Partial;
    }

    if (result.outcome == Outcome::Partial) {
        tree_.node_mut(n).evidence = strongest(tree_.node(n).evidence, res.evidence);
    }
    std::string output = res.raw;
    if (!res.success) output += res.diagnostics();
    record_action(n, action, result.outcome, res.evidence, output);

    if (result.outcome == Outcome::Success) {
        auto& done = tree_.node_mut(n);
        done.resolved = true;
        done.evidence = Evidence::Verified;
        store_.summarize_branch(tree_, n, BranchStatus::Completed, done.tdi);
        const auto before = pruned_nodes(tree_);
        const bool existed = pivot_root(tree_, host).has_value();
        if (existed) {
            for (FactId c : credentials) propagate_credentials(tree_, store_, store_.fact(c), config_);
        } else {
            NodeId root = spawn_pivot(tree_, store_, host, credentials, config_);
            tree_.node_mut(root).state_ref = store_.take_snapshot(tree_, root);
            result.pivot_root = root;
        }
        for (NodeId id : before) {
            if (!tree_.node(id).pruned) result.reactivated.push_back(id);
        }
    }
    return result;
}

bool Planner::step() {
    if (exhausted_ || budget_left_ == 0 || goal_reached()) return false;
    if (!difficulty_fresh_) refresh_difficulty();
    const auto selected = config_.selection == SelectionPolicy::DepthFirst ? select_depth_first(tree_, previous_)
                                                                           : select_node(tree_, config_);
    if (!selected) {
        exhausted_ = true;
        return false;
    }
    const NodeId n = *selected;
    if (previous_ && *previous_ != n && !tree_.within(n, *previous_) && !tree_.node(*previous_).pruned) {
        const auto* s = store_.summary(*previous_);
        if (!s || s->status == BranchStatus::Active) {
            store_.summarize_branch(tree_, *previous_, BranchStatus::Active, tree_.node(*previous_).tdi);
        }
    }

    const AttackNode before = tree_.node(n);
    TraceRecord rec;
    rec.iteration = trace_.records.size() + 1;
    rec.node = n.value;
    if (before.parent) rec.parent = before.parent->value;
    rec.depth = tree_.depth(n);
    rec.tdi = before.tdi;
    rec.horizon = before.dims.horizon_norm;
    rec.evidence = before.dims.evidence_conf;
    rec.context = before.dims.context_load;
    rec.success = before.dims.success_rate;
    rec.promise_before = before.promise;
    const std::uint64_t retries_before = gateway_.stats().retries;

    const Mode mode = select_mode(before.tdi, config_);
    Mode arm = mode;
    if (mode == Mode::Delegate) {
        const auto ctx = assemble_context(store_, tree_, n, config_, gateway_.summarizer());
        arm = gateway_.decide(before.dims, ctx.render()).choice;
    }
    if (arm == Mode::Exploit && before.kind != NodeKind::Hypothesis) arm = Mode::Recon;
    rec.mode = mode_name(mode);
    rec.arm = mode_name(arm);

    if (arm == Mode::Recon) {
        for (NodeId c : execute_recon(n)) rec.children.push_back(c.value);
    } else {
        auto r = execute_exploit(n);
        if (r.pivot_root) {
            rec.pivot = true;
            rec.pivot_root = r.pivot_root->value;
            rec.children.push_back(r.pivot_root->value);
        }
    }
    const auto& action = tree_.node(*last_action_);
    rec.action = action.label;
    rec.outcome = outcome_name(*action.outcome);

    refresh_difficulty();
    if (config_.prune_enabled && tree_.on_frontier(n)) {
        if (prune_branch(tree_, store_, n, config_).pruned) {
            rec.pruned = true;
            refresh_difficulty();
        }
    }
    rec.promise_after = tree_.node(n).promise;
    --budget_left_;
    rec.budget_remaining = budget_left_;
    rec.retries = gateway_.stats().retries - retries_before;
    previous_ = n;
    trace_.records.push_back(std::move(rec));
    return true;
}

EngagementReport Planner::run() {
    EngagementReport r;
    try {
        while (step()) {
        }
    } catch (const GatewayError& e) {
        r.aborted = e.what();
    }
    r.compromised = compromised();
    for (const auto& f : store_.facts()) {
        if (f.kind == FactKind::Vulnerability && !f.attr("flag").empty()) r.flags.insert(f.attr("flag"));
    }
    r.iterations_used = trace_.records.size();
    r.goal_reached = goal_reached();
    r.frontier_exhausted = exhausted_;
    r.tree = tree_;
    r.facts = store_.facts();
    r.trace = trace_;
    return r;
}

EngagementReport run_engagement(SimEnvironment& env, const EngagementGoal& goal, const PlannerConfig& config,
                                std::shared_ptr<Backend> backend, const std::string& trace_path) {
    if (!backend) backend = make_backend(config.gateway, &env, config.seed);
    Planner planner(env, goal, config, std::move(backend));
    auto report = planner.run();
    if (!trace_path.empty()) {
        std::ofstream out(trace_path, std::ios::binary);
        if (!out) throw ConfigError("cannot write trace " + trace_path);
        write_trace(out, report.trace);
        report.trace_path = trace_path;
    }
    return report;
}

}  // namespace egats
