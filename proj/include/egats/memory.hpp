#pragma once

#include "egats/config.hpp"
#include "egats/tree.hpp"
#include "egats/types.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace egats {

using FactId = std::uint64_t;

struct Fact {
    FactKind kind = FactKind::Host;
    std::map<std::string, std::string> attributes;
    std::uint64_t discovered_at = 0;
    NodeId provenance;

    std::string attr(const std::string& key) const;
    // Host the fact is about: scope for credentials, the host attribute
    // otherwise (hostname, then address, for hosts).
    std::string host() const;
    // Kind plus identity attributes; duplicates share this key.
    std::string identity() const;
};

// Attributes each kind must carry; the identity attributes are the same set
// except that vulnerabilities are identified by id alone.
const std::vector<std::string>& mandatory_attributes(FactKind kind);

struct ActionRecord {
    NodeId node;
    std::string action;
    Outcome outcome = Outcome::Partial;
    std::string output;
    std::uint64_t at = 0;
};

enum class BranchStatus { Active, Pruned, Completed };
std::string_view to_string(BranchStatus s);

struct BranchSummary {
    NodeId branch_root;
    BranchStatus status = BranchStatus::Active;
    std::vector<FactId> findings;
    double tdi_at_suspension = 0.0;
    std::vector<std::string> next_actions;
    std::vector<FactPattern> preconditions;

    std::string render() const;
};

struct Snapshot {
    std::uint64_t id = 0;
    NodeId node;
    std::uint64_t facts_known = 0;
    std::uint64_t taken_at = 0;
    bool suspended = false;
    std::string text;
};

enum class Compression { None, Summarized, Aggressive };
std::string_view to_string(Compression c);

struct AssembledContext {
    std::vector<ActionRecord> path_context;
    std::string node_snapshot;
    std::vector<Fact> relevant_facts;
    std::vector<BranchSummary> sibling_summaries;
    // Filled when sibling summaries were compressed; replaces their full text.
    std::vector<std::string> sibling_digests;

    std::uint64_t token_estimate = 0;
    std::uint64_t raw_token_estimate = 0;
    double load = 0.0;
    double raw_load = 0.0;
    Compression compression = Compression::None;
    std::size_t dropped_path_records = 0;

    std::string render() const;
};

using TokenEstimator = std::function<std::uint64_t(std::string_view)>;
using Summarizer = std::function<std::string(std::string_view, std::size_t)>;

// Characters / 4, rounded up.
std::uint64_t estimate_tokens(std::string_view text);
// Keeps the first `max_chars` characters and marks the cut.
std::string head_truncate(std::string_view text, std::size_t max_chars);

// Engagement facts kept outside any conversation. Append and merge only.
class StateStore {
public:
    StateStore();

    // Validates mandatory attributes and provenance, stamps the logical
    // clock. A duplicate identity returns the existing id untouched.
    FactId record_fact(Fact fact, const AttackTree& tree);
    const Fact& fact(FactId id) const;
    const std::vector<Fact>& facts() const { return facts_; }
    std::vector<FactId> facts_of(FactKind kind) const;
    std::optional<FactId> find(const std::string& identity) const;
    bool satisfies(const FactPattern& pattern) const;

    void record_action(ActionRecord record);
    const std::vector<ActionRecord>& actions_at(NodeId node) const;

    // Captures the node's state; returns the snapshot id for state_ref.
    std::uint64_t take_snapshot(const AttackTree& tree, NodeId node);
    const Snapshot& snapshot(std::uint64_t id) const;
    void suspend_snapshots(const AttackTree& tree, NodeId branch_root, bool suspended);

    // Stores (or replaces) the summary for `branch_root`.
    const BranchSummary& summarize_branch(const AttackTree& tree, NodeId branch_root, BranchStatus status,
                                          double tdi, std::vector<std::string> next_actions = {});
    const BranchSummary* summary(NodeId branch_root) const;
    const std::map<NodeId, BranchSummary>& summaries() const { return summaries_; }

    // Suspended (non-completed) branches gated on the credential's scope,
    // highest suspension TDI first.
    std::vector<BranchSummary> match_reactivation_candidates(const Fact& credential) const;

    void set_token_estimator(TokenEstimator estimator) { estimator_ = std::move(estimator); }
    std::uint64_t tokens(std::string_view text) const { return estimator_(text); }

    // Appends one JSON line per newly recorded fact.
    void open_journal(const std::filesystem::path& path);
    // Replays a journal written by open_journal into an empty store.
    static std::vector<Fact> read_journal(const std::filesystem::path& path);

    std::uint64_t now() const { return clock_; }

private:
    std::uint64_t tick() { return ++clock_; }

    std::vector<Fact> facts_;
    std::map<std::string, FactId> by_identity_;
    std::map<NodeId, std::vector<ActionRecord>> actions_;
    std::vector<Snapshot> snapshots_;
    std::map<NodeId, BranchSummary> summaries_;
    TokenEstimator estimator_;
    std::uint64_t clock_ = 0;
    std::unique_ptr<std::ofstream> journal_;
};

std::string render_fact(const Fact& fact);

// Path context, node snapshot, target-relevant facts and sibling summaries
// for `node`. Above ideal_window the parts are compressed in the order
// siblings, older path observations, verbose outputs; above hard_window the
// oldest path records are dropped as well. Facts and the snapshot are never
// compressed.
AssembledContext assemble_context(const StateStore& store, const AttackTree& tree, NodeId node,
                                  const PlannerConfig& config, const Summarizer& summarize = head_truncate);

}  // namespace egats
