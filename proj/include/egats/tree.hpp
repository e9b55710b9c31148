#pragma once

#include "egats/config.hpp"
#include "egats/types.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace egats {

struct Precondition {
    FactPattern pattern;
    bool matched = false;
};

struct AttackNode {
    NodeId id;
    std::optional<NodeId> parent;
    NodeKind kind = NodeKind::Observation;
    double promise = 0.5;
    double tdi = 0.0;
    bool tdi_stale = true;
    std::uint64_t visits = 0;
    Evidence evidence = Evidence::Speculative;
    std::uint64_t state_ref = 0;
    bool pruned = false;
    std::vector<Precondition> preconditions;

    Target target;
    std::string label;
    std::string binding;              // vulnerability id for hypotheses
    std::string tool;                 // exploit tool for hypotheses
    std::optional<Outcome> outcome;   // set on action nodes
    bool resolved = false;            // exploited hypothesis, or exhausted observation
    TdiVector dims;                   // last computed difficulty breakdown

    double evidence_score() const { return score(evidence); }
    bool preconditions_met() const;
};

// Everything a caller chooses when adding a node; ids and links are the
// tree's business.
struct NodeSpec {
    NodeKind kind = NodeKind::Observation;
    double promise = 0.5;
    Evidence evidence = Evidence::Speculative;
    Target target;
    std::string label;
    std::string binding;
    std::string tool;
    std::vector<FactPattern> preconditions;
};

// Forest of attack states. Node ids are dense indices assigned in creation
// order and never reused.
class AttackTree {
public:
    // Throws ConfigError on an empty descriptor.
    static AttackTree init(std::string_view target);

    const std::string& target() const { return target_; }

    NodeId add_root(NodeSpec spec);
    NodeId add_child(NodeId parent, NodeSpec spec);

    bool contains(NodeId id) const { return id.value < nodes_.size(); }
    const AttackNode& node(NodeId id) const;
    AttackNode& node_mut(NodeId id);
    std::size_t size() const { return nodes_.size(); }
    const std::vector<AttackNode>& nodes() const { return nodes_; }
    const std::vector<NodeId>& children(NodeId id) const;
    const std::vector<NodeId>& roots() const { return roots_; }
    std::uint64_t total_actions() const { return total_actions_; }

    // Root first, `id` last.
    std::vector<NodeId> path(NodeId id) const;
    std::size_t depth(NodeId id) const;
    NodeId root_of(NodeId id) const;
    // True when `id` equals `ancestor` or lies below it.
    bool within(NodeId id, NodeId ancestor) const;
    // Pre-order, `id` first.
    std::vector<NodeId> subtree(NodeId id) const;
    // Actions executed anywhere in the subtree (N_n).
    std::uint64_t subtree_visits(NodeId id) const;

    // Unresolved, non-pruned observation leaves (action records do not
    // count as children) plus unresolved, non-pruned hypotheses.
    bool on_frontier(NodeId id) const;
    std::vector<NodeId> frontier() const;

    // Exponential smoothing of promise from `id` up to its root, one visit
    // on `id`, one global action. Throws NotFoundError.
    void backpropagate(NodeId id, Outcome outcome, const PlannerConfig& config);

    // Marks `id` and all descendants.
    void mark_pruned(NodeId id, bool pruned);

    // One JSON object per line: id, parent, kind, promise, tdi, visits,
    // evidence, pruned.
    std::string export_jsonl() const;

    // Throws ContractViolation if the forest structure is broken.
    void check_invariants() const;

private:
    NodeId push(std::optional<NodeId> parent, NodeSpec spec);

    std::string target_;
    std::vector<AttackNode> nodes_;
    std::vector<std::vector<NodeId>> children_;
    std::vector<NodeId> roots_;
    std::uint64_t total_actions_ = 0;
};

inline constexpr double kUnvisitedScore = std::numeric_limits<double>::infinity();

// promise + c*sqrt(ln N / visits) - lambda*tdi; +inf when visits == 0.
double ucb_score(double promise, double tdi, std::uint64_t visits, std::uint64_t total_actions,
                 const PlannerConfig& config);
// Uses node.visits. Throws ContractViolation for pruned nodes.
double ucb_score(const AttackNode& node, std::uint64_t total_actions, const PlannerConfig& config);

// Highest UCB over the frontier, scoring N_n by subtree visits. Unvisited
// nodes come first ordered by promise then id; other ties go to the lowest
// id. nullopt means the frontier is empty.
std::optional<NodeId> select_node(const AttackTree& tree, const PlannerConfig& config);

// Committed selection for the depth-first baseline.
std::optional<NodeId> select_depth_first(const AttackTree& tree, std::optional<NodeId> previous);

// delta > theta_prune and visits > k_min.
bool prune_eligible(double tdi, std::uint64_t visits, const PlannerConfig& config);

}  // namespace egats
