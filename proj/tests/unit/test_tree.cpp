#include <doctest.h>

#include "egats/errors.hpp"
#include "egats/tree.hpp"

#include <cmath>
#include <random>

using namespace egats;

namespace {

NodeSpec hyp(double promise = 0.5) {
    NodeSpec s;
    s.kind = NodeKind::Hypothesis;
    s.promise = promise;
    return s;
}

NodeSpec action() {
    NodeSpec s;
    s.kind = NodeKind::Action;
    return s;
}

// Independent evaluation of the UCB expression.
double ucb_oracle(double phi, double delta, double n_n, double n, double c, double lambda) {
    return phi + c * std::sqrt(std::log(n) / n_n) - lambda * delta;
}

}  // namespace

TEST_CASE("init_tree builds a single observation root") {
    auto t = AttackTree::init("10.0.0.5");
    CHECK(t.size() == 1);
    CHECK(t.node(NodeId{0}).kind == NodeKind::Observation);
    CHECK(t.roots().size() == 1);
    CHECK_THROWS_AS(AttackTree::init(""), ConfigError);

    auto a = AttackTree::init("x");
    auto b = AttackTree::init("y");
    a.add_child(NodeId{0}, hyp());
    CHECK(a.roots().front().value == 0);
    CHECK(b.roots().front().value == 0);
    CHECK(b.size() == 1);
}

TEST_CASE("ucb_score examples") {
    PlannerConfig cfg;
    const double s = ucb_score(0.6, 0.4, 2, 10, cfg);
    CHECK(s == doctest::Approx(ucb_oracle(0.6, 0.4, 2, 10, std::sqrt(2.0), 0.5)).epsilon(1e-12));
    CHECK(s == doctest::Approx(1.9174).epsilon(1e-4));
    CHECK(ucb_score(0.5, 0.0, 1, 1, cfg) == doctest::Approx(0.5));
    CHECK(std::isinf(ucb_score(0.5, 0.3, 0, 10, cfg)));
}

TEST_CASE("ucb_score rejects pruned nodes") {
    auto t = AttackTree::init("net");
    auto h = t.add_child(NodeId{0}, hyp());
    t.mark_pruned(h, true);
    PlannerConfig cfg;
    CHECK_THROWS_AS(ucb_score(t.node(h), 1, cfg), ContractViolation);
}

TEST_CASE("select_node picks the argmax") {
    PlannerConfig cfg;
    cfg.c_explore = 1.0;
    cfg.lambda_difficulty = 0.0;
    auto t = AttackTree::init("net");
    auto a = t.add_child(NodeId{0}, hyp());
    auto b = t.add_child(NodeId{0}, hyp());
    t.backpropagate(t.add_child(a, action()), Outcome::Partial, cfg);
    t.backpropagate(t.add_child(b, action()), Outcome::Partial, cfg);
    // N = 2, N_n = 1: exploration term sqrt(ln 2) is shared by both.
    const double bonus = std::sqrt(std::log(2.0));
    t.node_mut(a).promise = 1.2 - bonus;
    t.node_mut(b).promise = 0.9 - bonus;
    CHECK(ucb_score(t.node(a).promise, 0.0, t.subtree_visits(a), 2, cfg) == doctest::Approx(1.2));
    CHECK(ucb_score(t.node(b).promise, 0.0, t.subtree_visits(b), 2, cfg) == doctest::Approx(0.9));
    CHECK(select_node(t, cfg) == a);
}

TEST_CASE("select_node prefers unvisited nodes") {
    PlannerConfig cfg;
    auto t = AttackTree::init("net");
    auto visited = t.add_child(NodeId{0}, hyp(1.0));
    auto act = t.add_child(visited, action());
    t.backpropagate(act, Outcome::Success, cfg);
    auto fresh = t.add_child(NodeId{0}, hyp(0.1));
    CHECK(select_node(t, cfg) == fresh);
}

TEST_CASE("select_node breaks exact ties by lower id") {
    PlannerConfig cfg;
    auto t = AttackTree::init("net");
    t.node_mut(NodeId{0}).resolved = true;
    std::vector<NodeId> ids;
    for (int i = 0; i < 8; ++i) ids.push_back(t.add_child(NodeId{0}, hyp(0.4)));
    // Only ids 3 and 7 stay on the frontier, equally visited.
    for (auto id : ids) {
        if (id.value != 3 && id.value != 7) t.node_mut(id).resolved = true;
    }
    for (auto id : {NodeId{3}, NodeId{7}}) {
        auto act = t.add_child(id, action());
        t.backpropagate(act, Outcome::Partial, cfg);
        t.node_mut(id).promise = 0.4;
    }
    CHECK(select_node(t, cfg) == NodeId{3});
}

TEST_CASE("backpropagate smooths promise along the path") {
    PlannerConfig cfg;
    auto t = AttackTree::init("net");
    auto h = t.add_child(NodeId{0}, hyp(0.5));
    t.backpropagate(h, Outcome::Success, cfg);
    CHECK(t.node(h).promise == doctest::Approx(0.65).epsilon(1e-12));

    auto p = t.add_child(NodeId{0}, hyp(0.5));
    t.backpropagate(p, Outcome::Partial, cfg);
    CHECK(t.node(p).promise == doctest::Approx(0.5).epsilon(1e-12));

    auto f = t.add_child(NodeId{0}, hyp(0.5));
    for (int i = 0; i < 3; ++i) t.backpropagate(f, Outcome::Failure, cfg);
    CHECK(std::abs(t.node(f).promise - (std::pow(0.7, 3) * 0.4 + 0.1)) < 1e-9);
    CHECK(std::abs(t.node(f).promise - 0.2372) < 1e-9);
    CHECK(t.total_actions() == 5);
    t.check_invariants();
}

TEST_CASE("frontier excludes actions, pruned and resolved nodes") {
    auto t = AttackTree::init("net");
    auto h1 = t.add_child(NodeId{0}, hyp());
    auto h2 = t.add_child(NodeId{0}, hyp());
    auto a = t.add_child(h1, action());
    CHECK_FALSE(t.on_frontier(NodeId{0}));   // has a non-action child
    CHECK(t.on_frontier(h1));
    CHECK_FALSE(t.on_frontier(a));
    t.mark_pruned(h2, true);
    CHECK_FALSE(t.on_frontier(h2));
    t.node_mut(h1).resolved = true;
    CHECK(t.frontier().empty());
}

TEST_CASE("prune_eligible boundaries") {
    PlannerConfig cfg;
    CHECK(prune_eligible(0.85, 4, cfg));
    CHECK_FALSE(prune_eligible(0.85, 3, cfg));
    CHECK_FALSE(prune_eligible(0.75, 10, cfg));
    CHECK_FALSE(prune_eligible(0.8, 10, cfg));
}

TEST_CASE("property: random trees keep invariants and promise in range") {
    PlannerConfig cfg;
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 50; ++trial) {
        auto t = AttackTree::init("net");
        std::uint64_t actions = 0;
        for (int i = 0; i < 60; ++i) {
            std::uniform_int_distribution<std::uint64_t> pick(0, t.size() - 1);
            NodeId parent{pick(rng)};
            if (t.node(parent).kind == NodeKind::Action) continue;
            if (rng() % 3 == 0) {
                auto act = t.add_child(parent, action());
                t.backpropagate(act, static_cast<Outcome>(rng() % 3), cfg);
                ++actions;
            } else {
                t.add_child(parent, hyp(std::uniform_real_distribution<double>(0, 1)(rng)));
            }
        }
        t.check_invariants();
        CHECK(t.total_actions() == actions);
        CHECK(t.subtree_visits(NodeId{0}) == actions);
        for (const auto& n : t.nodes()) {
            CHECK(n.promise >= 0.0);
            CHECK(n.promise <= 1.0);
            for (auto id : t.path(n.id)) CHECK(t.within(n.id, id));
        }
        // A node not yet visited always wins selection over visited ones.
        auto fresh = t.add_child(NodeId{0}, hyp(0.0));
        auto sel = select_node(t, cfg);
        REQUIRE(sel);
        CHECK(t.subtree_visits(*sel) == 0);
        CHECK(sel->value <= fresh.value);
    }
}

TEST_CASE("export_jsonl writes one line per node") {
    auto t = AttackTree::init("net");
    t.add_child(NodeId{0}, hyp());
    auto text = t.export_jsonl();
    CHECK(std::count(text.begin(), text.end(), '\n') == 2);
    CHECK(text.find("\"kind\":\"hypothesis\"") != std::string::npos);
}
