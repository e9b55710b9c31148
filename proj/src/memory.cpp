#include "egats/memory.hpp"

#include "egats/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <sstream>

namespace egats {

std::string Fact::attr(const std::string& key) const {
    auto it = attributes.find(key);
    return it == attributes.end() ? std::string() : it->second;
}

std::string Fact::host() const {
    switch (kind) {
        case FactKind::Credential: return attr("scope");
        case FactKind::Host: {
            auto name = attr("hostname");
            return name.empty() ? attr("address") : name;
        }
        default: return attr("host");
    }
}

const std::vector<std::string>& mandatory_attributes(FactKind kind) {
    static const std::vector<std::string> host{"address"};
    static const std::vector<std::string> service{"host", "port"};
    static const std::vector<std::string> credential{"principal", "scope"};
    static const std::vector<std::string> session{"host", "channel"};
    static const std::vector<std::string> vulnerability{"id", "status"};
    switch (kind) {
        case FactKind::Host: return host;
        case FactKind::Service: return service;
        case FactKind::Credential: return credential;
        case FactKind::Session: return session;
        case FactKind::Vulnerability: return vulnerability;
    }
    return host;
}

std::string Fact::identity() const {
    std::string key(to_string(kind));
    if (kind == FactKind::Vulnerability) return key + "|" + attr("id");
    for (const auto& a : mandatory_attributes(kind)) key += "|" + attr(a);
    return key;
}

std::string_view to_string(BranchStatus s) {
    switch (s) {
        case BranchStatus::Active: return "active";
        case BranchStatus::Pruned: return "pruned";
        case BranchStatus::Completed: return "completed";
    }
    return "?";
}

std::string_view to_string(Compression c) {
    switch (c) {
        case Compression::None: return "none";
        case Compression::Summarized: return "summarized";
        case Compression::Aggressive: return "aggressive";
    }
    return "?";
}

std::string render_fact(const Fact& fact) {
    std::string out(to_string(fact.kind));
    for (const auto& [k, v] : fact.attributes) out += " " + k + "=" + v;
    out += " @" + std::to_string(fact.discovered_at) + " from node " + std::to_string(fact.provenance.value);
    return out;
}

std::string BranchSummary::render() const {
    std::ostringstream os;
    os << "branch " << branch_root.value << " [" << to_string(status) << "] tdi=" << tdi_at_suspension
       << " findings=" << findings.size();
    for (const auto& p : preconditions) os << " needs " << p.str();
    for (const auto& a : next_actions) os << "\n  next: " << a;
    return os.str();
}

std::uint64_t estimate_tokens(std::string_view text) { return (text.size() + 3) / 4; }

std::string head_truncate(std::string_view text, std::size_t max_chars) {
    if (text.size() <= max_chars) return std::string(text);
    return std::string(text.substr(0, max_chars)) + " [...]";
}

StateStore::StateStore() : estimator_(estimate_tokens) {}

FactId StateStore::record_fact(Fact fact, const AttackTree& tree) {
    std::vector<Violation> problems;
    for (const auto& a : mandatory_attributes(fact.kind)) {
        if (fact.attr(a).empty()) problems.push_back({a, "required for " + std::string(to_string(fact.kind))});
    }
    if (!tree.contains(fact.provenance)) {
        problems.push_back({"provenance", "node " + std::to_string(fact.provenance.value) + " not in tree"});
    }
    if (!problems.empty()) throw ValidationError(std::move(problems));

    auto key = fact.identity();
    if (auto it = by_identity_.find(key); it != by_identity_.end()) return it->second;

    fact.discovered_at = tick();
    FactId id = facts_.size();
    facts_.push_back(fact);
    by_identity_.emplace(std::move(key), id);
    if (journal_) {
        nlohmann::ordered_json j;
        j["kind"] = std::string(to_string(fact.kind));
        j["attributes"] = fact.attributes;
        j["timestamp"] = fact.discovered_at;
        j["provenance"] = fact.provenance.value;
        *journal_ << j.dump() << '\n';
        journal_->flush();
    }
    return id;
}

const Fact& StateStore::fact(FactId id) const {
    if (id >= facts_.size()) throw NotFoundError("no fact " + std::to_string(id));
    return facts_[id];
}

std::vector<FactId> StateStore::facts_of(FactKind kind) const {
    std::vector<FactId> out;
    for (FactId i = 0; i < facts_.size(); ++i) {
        if (facts_[i].kind == kind) out.push_back(i);
    }
    return out;
}

std::optional<FactId> StateStore::find(const std::string& identity) const {
    auto it = by_identity_.find(identity);
    if (it == by_identity_.end()) return std::nullopt;
    return it->second;
}

bool StateStore::satisfies(const FactPattern& pattern) const {
    return std::any_of(facts_.begin(), facts_.end(),
                       [&](const Fact& f) { return f.kind == pattern.kind && f.host() == pattern.host; });
}

void StateStore::record_action(ActionRecord record) {
    record.at = tick();
    actions_[record.node].push_back(std::move(record));
}

const std::vector<ActionRecord>& StateStore::actions_at(NodeId node) const {
    static const std::vector<ActionRecord> none;
    auto it = actions_.find(node);
    return it == actions_.end() ? none : it->second;
}

std::uint64_t StateStore::take_snapshot(const AttackTree& tree, NodeId node) {
    const auto& n = tree.node(node);
    Snapshot s;
    s.id = snapshots_.size() + 1;
    s.node = node;
    s.facts_known = facts_.size();
    s.taken_at = clock_;
    std::ostringstream os;
    os << to_string(n.kind) << " node " << n.id.value << " '" << n.label << "' target=" << n.target.host;
    if (n.target.port) os << ":" << *n.target.port;
    os << " evidence=" << n.evidence_score() << " promise=" << n.promise << " facts=" << s.facts_known;
    for (const auto& p : n.preconditions) os << " needs " << p.pattern.str() << (p.matched ? "(met)" : "");
    s.text = os.str();
    snapshots_.push_back(std::move(s));
    return snapshots_.back().id;
}

const Snapshot& StateStore::snapshot(std::uint64_t id) const {
    if (id == 0 || id > snapshots_.size()) throw NotFoundError("no snapshot " + std::to_string(id));
    return snapshots_[id - 1];
}

void StateStore::suspend_snapshots(const AttackTree& tree, NodeId branch_root, bool suspended) {
    for (auto& s : snapshots_) {
        if (tree.contains(s.node) && tree.within(s.node, branch_root)) s.suspended = suspended;
    }
}

const BranchSummary& StateStore::summarize_branch(const AttackTree& tree, NodeId branch_root, BranchStatus status,
                                                  double tdi, std::vector<std::string> next_actions) {
    const auto& root = tree.node(branch_root);
    BranchSummary s;
    s.branch_root = branch_root;
    s.status = status;
    s.tdi_at_suspension = tdi;
    s.next_actions = std::move(next_actions);
    for (const auto& p : root.preconditions) s.preconditions.push_back(p.pattern);
    for (FactId i = 0; i < facts_.size(); ++i) {
        const auto& f = facts_[i];
        if ((f.kind == FactKind::Credential || f.kind == FactKind::Vulnerability) && tree.contains(f.provenance) &&
            tree.within(f.provenance, branch_root)) {
            s.findings.push_back(i);
        }
    }
    summaries_[branch_root] = std::move(s);
    return summaries_[branch_root];
}

const BranchSummary* StateStore::summary(NodeId branch_root) const {
    auto it = summaries_.find(branch_root);
    return it == summaries_.end() ? nullptr : &it->second;
}

std::vector<BranchSummary> StateStore::match_reactivation_candidates(const Fact& credential) const {
    if (credential.kind != FactKind::Credential) {
        throw ContractViolation("reactivation matching needs a credential fact");
    }
    const FactPattern wanted{FactKind::Credential, credential.host()};
    std::vector<BranchSummary> out;
    for (const auto& [root, s] : summaries_) {
        if (s.status == BranchStatus::Completed) continue;
        if (std::find(s.preconditions.begin(), s.preconditions.end(), wanted) != s.preconditions.end()) {
            out.push_back(s);
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const BranchSummary& a, const BranchSummary& b) {
        return a.tdi_at_suspension > b.tdi_at_suspension;
    });
    return out;
}

void StateStore::open_journal(const std::filesystem::path& path) {
    journal_ = std::make_unique<std::ofstream>(path, std::ios::app);
    if (!*journal_) throw ConfigError("cannot open journal " + path.string());
}

std::vector<Fact> StateStore::read_journal(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("cannot open journal " + path.string());
    std::vector<Fact> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            Fact f;
            f.kind = fact_kind_from_string(j.at("kind").get<std::string>());
            f.attributes = j.at("attributes").get<std::map<std::string, std::string>>();
            f.discovered_at = j.at("timestamp").get<std::uint64_t>();
            f.provenance = NodeId{j.at("provenance").get<std::uint64_t>()};
            out.push_back(std::move(f));
        } catch (const std::exception& e) {
            throw ParseError(lineno, e.what());
        }
    }
    return out;
}

std::string AssembledContext::render() const {
    std::string out = "## path\n";
    for (const auto& r : path_context) {
        out += "[node " + std::to_string(r.node.value) + "] " + r.action + " -> " + std::string(to_string(r.outcome)) +
               "\n" + r.output + "\n";
    }
    out += "## state\n" + node_snapshot + "\n## facts\n";
    for (const auto& f : relevant_facts) out += render_fact(f) + "\n";
    out += "## siblings\n";
    if (!sibling_digests.empty()) {
        for (const auto& d : sibling_digests) out += d + "\n";
    } else {
        for (const auto& s : sibling_summaries) out += s.render() + "\n";
    }
    return out;
}

namespace {

constexpr std::size_t kSiblingDigestChars = 64;
constexpr std::size_t kOldObservationChars = 96;
constexpr std::size_t kVerboseOutputChars = 160;

bool relevant(const Fact& f, const Target& target) {
    if (target.host.empty()) return f.kind == FactKind::Host;
    if (f.host() != target.host) return false;
    if (f.kind == FactKind::Service && target.port) return f.attr("port") == std::to_string(*target.port);
    return true;
}

}  // namespace

AssembledContext assemble_context(const StateStore& store, const AttackTree& tree, NodeId node,
                                  const PlannerConfig& config, const Summarizer& summarize) {
    const auto& n = tree.node(node);
    AssembledContext ctx;
    const auto path = tree.path(node);
    for (auto id : path) {
        for (const auto& r : store.actions_at(id)) ctx.path_context.push_back(r);
    }
    ctx.node_snapshot = n.state_ref ? store.snapshot(n.state_ref).text
                                    : std::string(to_string(n.kind)) + " node " + std::to_string(n.id.value) +
                                          " '" + n.label + "'";
    for (const auto& f : store.facts()) {
        if (relevant(f, n.target)) ctx.relevant_facts.push_back(f);
    }
    for (auto id : path) {
        const auto& p = tree.node(id);
        if (!p.parent) continue;
        for (auto sib : tree.children(*p.parent)) {
            if (sib == id) continue;
            if (const auto* s = store.summary(sib)) ctx.sibling_summaries.push_back(*s);
        }
    }

    const double window = static_cast<double>(config.context_window);
    auto measure = [&] {
        ctx.token_estimate = store.tokens(ctx.render());
        ctx.load = static_cast<double>(ctx.token_estimate) / window;
    };
    measure();
    ctx.raw_token_estimate = ctx.token_estimate;
    ctx.raw_load = ctx.load;
    if (ctx.raw_load <= config.ideal_window) return ctx;

    const bool hard = ctx.raw_load > config.hard_window;
    ctx.compression = hard ? Compression::Aggressive : Compression::Summarized;
    auto done = [&] { return ctx.load <= config.ideal_window; };

    if (hard) {
        // Older path segments go first: keep the node's own records and the
        // most recent one above it.
        std::size_t keep_from = ctx.path_context.size();
        while (keep_from > 0 && ctx.path_context[keep_from - 1].node == node) --keep_from;
        if (keep_from > 0) --keep_from;
        ctx.dropped_path_records = keep_from;
        ctx.path_context.erase(ctx.path_context.begin(), ctx.path_context.begin() + static_cast<long>(keep_from));
        measure();
        if (done()) return ctx;
    }

    if (!ctx.sibling_summaries.empty()) {
        for (const auto& s : ctx.sibling_summaries) ctx.sibling_digests.push_back(summarize(s.render(), kSiblingDigestChars));
        measure();
        if (done()) return ctx;
    }
    for (auto& r : ctx.path_context) {
        if (r.node != node) r.output = summarize(r.output, kOldObservationChars);
    }
    measure();
    if (done()) return ctx;
    for (auto& r : ctx.path_context) r.output = summarize(r.output, kVerboseOutputChars);
    measure();
    if (!hard) return ctx;

    while (ctx.load > config.ideal_window && ctx.path_context.size() > 1) {
        ctx.path_context.erase(ctx.path_context.begin());
        ++ctx.dropped_path_records;
        measure();
    }
    return ctx;
}

}  // namespace egats
