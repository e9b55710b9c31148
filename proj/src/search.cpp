#include "egats/search.hpp"

#include "egats/errors.hpp"
#include "egats/tda.hpp"

#include <algorithm>
#include <sstream>

namespace egats {

PruneDecision prune_branch(AttackTree& tree, StateStore& store, NodeId node, const PlannerConfig& config) {
    const auto& n = tree.node(node);
    PruneDecision d;
    if (n.pruned) {
        d.diagnostic = "node already pruned";
        return d;
    }
    const auto visits = tree.subtree_visits(node);
    if (!prune_eligible(n.tdi, visits, config)) {
        std::ostringstream os;
        os << "not pruned: tdi " << n.tdi << " vs threshold " << config.theta_prune << ", " << visits
           << " actions vs k_min " << config.k_min;
        d.diagnostic = os.str();
        return d;
    }
    tree.mark_pruned(node, true);
    std::vector<std::string> next;
    for (const auto& p : n.preconditions) {
        if (!p.matched) next.push_back("obtain " + p.pattern.str());
    }
    store.summarize_branch(tree, node, BranchStatus::Pruned, n.tdi, std::move(next));
    store.suspend_snapshots(tree, node, true);
    d.pruned = true;
    return d;
}

std::vector<NodeId> propagate_credentials(AttackTree& tree, StateStore& store, const Fact& credential,
                                          const PlannerConfig& config) {
    if (credential.kind != FactKind::Credential) throw ContractViolation("credential propagation needs a credential");
    if (!store.find(credential.identity())) throw ContractViolation("credential is not recorded in the store");
    const FactPattern wanted{FactKind::Credential, credential.host()};

    std::vector<NodeId> touched;
    for (std::size_t i = 0; i < tree.size(); ++i) {
        NodeId id{i};
        auto& n = tree.node_mut(id);
        bool hit = false;
        for (auto& p : n.preconditions) {
            if (p.pattern == wanted && !p.matched) {
                p.matched = true;
                hit = true;
            }
        }
        if (!hit) continue;
        if (n.preconditions_met()) n.evidence = Evidence::Verified;
        touched.push_back(id);
    }

    std::vector<NodeId> reactivated;
    for (NodeId id : touched) {
        auto& n = tree.node_mut(id);
        if (!n.pruned) {
            n.tdi_stale = true;
            continue;
        }
        TdiVector dims = n.dims;
        dims.evidence_conf = path_confidence(tree, id);
        dims = compute_tdi(dims, config);
        n.dims = dims;
        n.tdi = dims.tdi;
        if (n.tdi > config.theta_prune) continue;
        tree.mark_pruned(id, false);
        for (NodeId a : tree.path(id)) tree.node_mut(a).pruned = false;
        store.suspend_snapshots(tree, id, false);
        if (store.summary(id)) store.summarize_branch(tree, id, BranchStatus::Active, n.tdi);
        reactivated.push_back(id);
    }
    return reactivated;
}

std::optional<NodeId> pivot_root(const AttackTree& tree, const std::string& host) {
    for (NodeId r : tree.roots()) {
        if (!tree.node(r).target.host.empty() && tree.node(r).target.host == host) return r;
    }
    return std::nullopt;
}

NodeId spawn_pivot(AttackTree& tree, StateStore& store, const std::string& host,
                   const std::vector<FactId>& inherited, const PlannerConfig& config) {
    if (auto existing = pivot_root(tree, host)) return *existing;
    if (!store.satisfies({FactKind::Session, host})) {
        throw ContractViolation("pivot on " + host + " without verified compromise");
    }
    NodeSpec spec;
    spec.kind = NodeKind::Observation;
    spec.promise = 0.5;
    spec.evidence = Evidence::Verified;
    spec.target.host = host;
    spec.label = "pivot " + host;
    NodeId root = tree.add_root(std::move(spec));
    for (FactId f : inherited) {
        const auto& fact = store.fact(f);
        if (fact.kind == FactKind::Credential) propagate_credentials(tree, store, fact, config);
    }
    return root;
}

}  // namespace egats
