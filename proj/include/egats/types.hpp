#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace egats {

struct NodeId {
    std::uint64_t value = 0;

    friend auto operator<=>(const NodeId&, const NodeId&) = default;
};

enum class NodeKind { Observation, Hypothesis, Action };

enum class Outcome { Success, Partial, Failure };

// Fixed reward mapping used by promise backpropagation.
constexpr double reward(Outcome o) {
    switch (o) {
        case Outcome::Success: return 1.0;
        case Outcome::Partial: return 0.5;
        case Outcome::Failure: return 0.1;
    }
    return 0.1;
}

// Evidence rubric. Scores are the only four values a node may carry.
enum class Evidence { Verified, Confirmed, Plausible, Speculative };

constexpr double score(Evidence e) {
    switch (e) {
        case Evidence::Verified: return 1.0;
        case Evidence::Confirmed: return 0.8;
        case Evidence::Plausible: return 0.5;
        case Evidence::Speculative: return 0.3;
    }
    return 0.3;
}

constexpr Evidence strongest(Evidence a, Evidence b) { return score(a) >= score(b) ? a : b; }

// Throws ContractViolation for anything outside {1.0, 0.8, 0.5, 0.3}.
Evidence evidence_from_score(double s);

enum class Mode { Recon, Exploit, Delegate };

// The four difficulty dimensions and their weighted combination.
struct TdiVector {
    double horizon_raw = 0.0;
    double horizon_norm = 0.5;
    double success_rate = 0.5;
    double context_load = 0.0;
    double evidence_conf = 0.3;
    double tdi = 0.0;
};

enum class FactKind { Host, Service, Credential, Session, Vulnerability };

// A precondition such as "credential:B" (a credential scoped to host B)
// or "session:A".
struct FactPattern {
    FactKind kind = FactKind::Credential;
    std::string host;

    static FactPattern parse(std::string_view text);
    std::string str() const;

    friend bool operator==(const FactPattern&, const FactPattern&) = default;
};

struct Target {
    std::string host;                 // empty for the network-level root
    std::optional<int> port;

    friend bool operator==(const Target&, const Target&) = default;
};

std::string_view to_string(NodeKind k);
std::string_view to_string(Outcome o);
std::string_view to_string(Mode m);
std::string_view to_string(FactKind k);

NodeKind node_kind_from_string(std::string_view s);
Outcome outcome_from_string(std::string_view s);
Mode mode_from_string(std::string_view s);
FactKind fact_kind_from_string(std::string_view s);

}  // namespace egats

template <>
struct std::hash<egats::NodeId> {
    std::size_t operator()(const egats::NodeId& id) const noexcept {
        return std::hash<std::uint64_t>{}(id.value);
    }
};
