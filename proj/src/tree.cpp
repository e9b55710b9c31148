#include "egats/tree.hpp"

#include "egats/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>

namespace egats {

bool AttackNode::preconditions_met() const {
    return std::all_of(preconditions.begin(), preconditions.end(), [](const Precondition& p) { return p.matched; });
}

AttackTree AttackTree::init(std::string_view target) {
    if (target.empty()) throw ConfigError("target descriptor must not be empty");
    AttackTree tree;
    tree.target_ = std::string(target);
    NodeSpec root;
    root.kind = NodeKind::Observation;
    root.promise = 0.5;
    root.evidence = Evidence::Speculative;
    root.label = std::string(target);
    tree.add_root(std::move(root));
    return tree;
}

NodeId AttackTree::push(std::optional<NodeId> parent, NodeSpec spec) {
    AttackNode n;
    n.id = NodeId{nodes_.size()};
    n.parent = parent;
    n.kind = spec.kind;
    n.promise = std::clamp(spec.promise, 0.0, 1.0);
    n.evidence = spec.evidence;
    n.target = std::move(spec.target);
    n.label = std::move(spec.label);
    n.binding = std::move(spec.binding);
    n.tool = std::move(spec.tool);
    for (auto& p : spec.preconditions) n.preconditions.push_back({std::move(p), false});
    nodes_.push_back(std::move(n));
    children_.emplace_back();
    return nodes_.back().id;
}

NodeId AttackTree::add_root(NodeSpec spec) {
    auto id = push(std::nullopt, std::move(spec));
    roots_.push_back(id);
    return id;
}

NodeId AttackTree::add_child(NodeId parent, NodeSpec spec) {
    if (!contains(parent)) throw NotFoundError("no node " + std::to_string(parent.value));
    auto id = push(parent, std::move(spec));
    children_[parent.value].push_back(id);
    return id;
}

const AttackNode& AttackTree::node(NodeId id) const {
    if (!contains(id)) throw NotFoundError("no node " + std::to_string(id.value));
    return nodes_[id.value];
}

AttackNode& AttackTree::node_mut(NodeId id) {
    if (!contains(id)) throw NotFoundError("no node " + std::to_string(id.value));
    return nodes_[id.value];
}

const std::vector<NodeId>& AttackTree::children(NodeId id) const {
    if (!contains(id)) throw NotFoundError("no node " + std::to_string(id.value));
    return children_[id.value];
}

std::vector<NodeId> AttackTree::path(NodeId id) const {
    std::vector<NodeId> out;
    for (std::optional<NodeId> cur = node(id).id; cur; cur = nodes_[cur->value].parent) out.push_back(*cur);
    std::reverse(out.begin(), out.end());
    return out;
}

std::size_t AttackTree::depth(NodeId id) const { return path(id).size() - 1; }

NodeId AttackTree::root_of(NodeId id) const { return path(id).front(); }

bool AttackTree::within(NodeId id, NodeId ancestor) const {
    for (std::optional<NodeId> cur = node(id).id; cur; cur = nodes_[cur->value].parent) {
        if (*cur == ancestor) return true;
    }
    return false;
}

std::vector<NodeId> AttackTree::subtree(NodeId id) const {
    std::vector<NodeId> out;
    std::vector<NodeId> stack{node(id).id};
    while (!stack.empty()) {
        auto cur = stack.back();
        stack.pop_back();
        out.push_back(cur);
        const auto& kids = children_[cur.value];
        for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.push_back(*it);
    }
    return out;
}

std::uint64_t AttackTree::subtree_visits(NodeId id) const {
    std::uint64_t total = 0;
    for (auto n : subtree(id)) total += nodes_[n.value].visits;
    return total;
}

bool AttackTree::on_frontier(NodeId id) const {
    const auto& n = node(id);
    if (n.pruned) return false;
    switch (n.kind) {
        case NodeKind::Action:
            return false;
        case NodeKind::Hypothesis:
            return !n.resolved;
        case NodeKind::Observation:
            return !n.resolved && std::none_of(children_[id.value].begin(), children_[id.value].end(),
                                [&](NodeId c) { return nodes_[c.value].kind != NodeKind::Action; });
    }
    return false;
}

std::vector<NodeId> AttackTree::frontier() const {
    std::vector<NodeId> out;
    for (const auto& n : nodes_) {
        if (on_frontier(n.id)) out.push_back(n.id);
    }
    return out;
}

void AttackTree::backpropagate(NodeId id, Outcome outcome, const PlannerConfig& config) {
    const double r = reward(outcome);
    for (std::optional<NodeId> cur = node(id).id; cur; cur = nodes_[cur->value].parent) {
        auto& n = nodes_[cur->value];
        n.promise = config.alpha * n.promise + (1.0 - config.alpha) * r;
        n.tdi_stale = true;
    }
    nodes_[id.value].visits += 1;
    total_actions_ += 1;
}

void AttackTree::mark_pruned(NodeId id, bool pruned) {
    for (auto n : subtree(id)) nodes_[n.value].pruned = pruned;
}

std::string AttackTree::export_jsonl() const {
    std::string out;
    for (const auto& n : nodes_) {
        nlohmann::ordered_json j;
        j["id"] = n.id.value;
        j["parent"] = n.parent ? nlohmann::ordered_json(n.parent->value) : nlohmann::ordered_json(nullptr);
        j["kind"] = std::string(to_string(n.kind));
        j["label"] = n.label;
        if (!n.binding.empty()) j["binding"] = n.binding;
        j["promise"] = n.promise;
        j["tdi"] = n.tdi;
        j["visits"] = n.visits;
        j["evidence"] = n.evidence_score();
        j["pruned"] = n.pruned;
        out += j.dump();
        out += '\n';
    }
    return out;
}

void AttackTree::check_invariants() const {
    std::vector<int> parents_seen(nodes_.size(), 0);
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].id.value != i) throw ContractViolation("node id does not match its slot");
        for (auto c : children_[i]) {
            if (!contains(c)) throw ContractViolation("edge to unknown node");
            if (!nodes_[c.value].parent || nodes_[c.value].parent->value != i) {
                throw ContractViolation("child/parent links disagree");
            }
            parents_seen[c.value] += 1;
        }
    }
    std::uint64_t visits = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const auto& n = nodes_[i];
        bool is_root = std::find(roots_.begin(), roots_.end(), n.id) != roots_.end();
        if (is_root == n.parent.has_value()) throw ContractViolation("root list and parent links disagree");
        if (!is_root && parents_seen[i] != 1) throw ContractViolation("node without exactly one parent");
        if (n.parent && n.parent->value >= i) throw ContractViolation("parent created after child");
        if (n.promise < 0.0 || n.promise > 1.0) throw ContractViolation("promise out of [0,1]");
        if (n.tdi < 0.0 || n.tdi > 1.0) throw ContractViolation("tdi out of [0,1]");
        visits += n.visits;
    }
    if (visits != total_actions_) throw ContractViolation("total_actions differs from executed actions");
}

double ucb_score(double promise, double tdi, std::uint64_t visits, std::uint64_t total_actions,
                 const PlannerConfig& config) {
    if (visits == 0) return kUnvisitedScore;
    if (total_actions < 1) throw ContractViolation("ucb_score needs total_actions >= 1");
    const double explore = std::sqrt(std::log(static_cast<double>(total_actions)) / static_cast<double>(visits));
    return promise + config.c_explore * explore - config.lambda_difficulty * tdi;
}

double ucb_score(const AttackNode& node, std::uint64_t total_actions, const PlannerConfig& config) {
    if (node.pruned) throw ContractViolation("ucb_score on pruned node " + std::to_string(node.id.value));
    return ucb_score(node.promise, node.tdi, node.visits, total_actions, config);
}

std::optional<NodeId> select_node(const AttackTree& tree, const PlannerConfig& config) {
    std::optional<NodeId> best;
    double best_score = 0.0;
    double best_promise = 0.0;
    for (auto id : tree.frontier()) {
        const auto& n = tree.node(id);
        const double s = ucb_score(n.promise, n.tdi, tree.subtree_visits(id), tree.total_actions(), config);
        bool better = false;
        if (!best) {
            better = true;
        } else if (s > best_score) {
            better = true;
        } else if (s == best_score && std::isinf(s) && n.promise > best_promise) {
            better = true;
        }
        // Frontier is in id order, so equal scores keep the lower id.
        if (better) {
            best = id;
            best_score = s;
            best_promise = n.promise;
        }
    }
    return best;
}

std::optional<NodeId> select_depth_first(const AttackTree& tree, std::optional<NodeId> previous) {
    if (previous && tree.contains(*previous) && tree.on_frontier(*previous)) return previous;
    std::optional<NodeId> best;
    std::size_t best_depth = 0;
    for (auto id : tree.frontier()) {
        auto d = tree.depth(id);
        if (!best || d > best_depth) {
            best = id;
            best_depth = d;
        }
    }
    return best;
}

bool prune_eligible(double tdi, std::uint64_t visits, const PlannerConfig& config) {
    return tdi > config.theta_prune && visits > config.k_min;
}

}  // namespace egats
