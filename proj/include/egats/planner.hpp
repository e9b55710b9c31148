#pragma once

#include "egats/config.hpp"
#include "egats/gateway.hpp"
#include "egats/memory.hpp"
#include "egats/sim.hpp"
#include "egats/tools.hpp"
#include "egats/trace.hpp"
#include "egats/tree.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace egats {

struct EngagementGoal {
    GoalSpec spec;
    std::uint64_t budget = 1;   // loop iterations

    void validate() const;      // ConfigError when budget == 0
};

struct EngagementReport {
    std::set<std::string> compromised;
    std::set<std::string> flags;
    std::uint64_t iterations_used = 0;
    bool goal_reached = false;
    bool frontier_exhausted = false;
    std::optional<std::string> aborted;   // backend failure that stopped the loop
    AttackTree tree;
    std::vector<Fact> facts;
    Trace trace;
    std::string trace_path;
};

struct ExploitResult {
    Outcome outcome = Outcome::Failure;
    bool executed = false;               // false when validation stopped it
    std::vector<std::string> violations;
    std::optional<NodeId> pivot_root;
    std::vector<NodeId> reactivated;
};

// One engagement: the tree, the store and the loop that drives them.
class Planner {
public:
    Planner(SimEnvironment& env, EngagementGoal goal, PlannerConfig config, std::shared_ptr<Backend> backend);

    EngagementReport run();

    // Single loop iteration; false once the goal is reached, the budget is
    // spent or the frontier is empty.
    bool step();

    // Arms of the loop, usable on their own. Both append an action node
    // under `node` and backpropagate from it.
    std::vector<NodeId> execute_recon(NodeId node);
    ExploitResult execute_exploit(NodeId node);

    bool goal_reached() const;
    std::set<std::string> compromised() const;

    const AttackTree& tree() const { return tree_; }
    AttackTree& tree() { return tree_; }
    const StateStore& store() const { return store_; }
    StateStore& store() { return store_; }
    const Trace& trace() const { return trace_; }
    const PlannerConfig& config() const { return config_; }
    Gateway& gateway() { return gateway_; }

    // Recomputes every frontier node's difficulty vector and TDI.
    void refresh_difficulty();

private:
    NodeId add_node(std::optional<NodeId> parent, NodeSpec spec);
    NodeId record_action(NodeId node, const std::string& action, Outcome outcome, Evidence evidence,
                         const std::string& output);
    std::pair<std::uint64_t, std::uint64_t> branch_counts(NodeId node) const;
    TdiVector dims_for(NodeId node, const std::map<NodeId, double>& raw, const std::map<NodeId, double>& normalized);

    SimEnvironment& env_;
    EngagementGoal goal_;
    PlannerConfig config_;
    Gateway gateway_;
    const ToolRegistry& registry_;
    SimExecutor executor_;
    AttackTree tree_;
    StateStore store_;
    Trace trace_;
    std::uint64_t budget_left_;
    std::optional<NodeId> previous_;
    std::vector<NodeId> last_children_;
    std::optional<NodeId> last_pivot_;
    std::optional<NodeId> last_action_;
    bool exhausted_ = false;
    bool difficulty_fresh_ = false;
};

// Builds the backend from config.gateway when `backend` is null and writes
// the trace to `trace_path` when it is non-empty.
EngagementReport run_engagement(SimEnvironment& env, const EngagementGoal& goal, const PlannerConfig& config,
                                std::shared_ptr<Backend> backend = nullptr, const std::string& trace_path = "");

}  // namespace egats
