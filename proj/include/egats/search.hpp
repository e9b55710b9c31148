#pragma once

#include "egats/config.hpp"
#include "egats/memory.hpp"
#include "egats/tree.hpp"

#include <string>
#include <vector>

namespace egats {

struct PruneDecision {
    bool pruned = false;
    std::string diagnostic;   // why nothing happened
};

// Prunes `node` when its TDI exceeds theta_prune after more than k_min
// actions in its subtree; emits a Pruned summary and suspends snapshots.
// Otherwise a no-op that says why.
PruneDecision prune_branch(AttackTree& tree, StateStore& store, NodeId node, const PlannerConfig& config);

// Marks matching credential preconditions, lifts evidence on nodes whose
// preconditions are now all met, and re-scores pruned ones; those at or
// under theta_prune come back with their visit counts intact. Returns the
// reactivated nodes in id order.
std::vector<NodeId> propagate_credentials(AttackTree& tree, StateStore& store, const Fact& credential,
                                          const PlannerConfig& config);

// Root for a compromised host; created once, later calls return it.
// Inherited credentials are propagated. Throws ContractViolation when no
// session fact exists for the host.
NodeId spawn_pivot(AttackTree& tree, StateStore& store, const std::string& host,
                   const std::vector<FactId>& inherited, const PlannerConfig& config);

std::optional<NodeId> pivot_root(const AttackTree& tree, const std::string& host);

}  // namespace egats
