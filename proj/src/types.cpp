#include "egats/types.hpp"

#include "egats/errors.hpp"

#include <array>
#include <cmath>

namespace egats {

Evidence evidence_from_score(double s) {
    for (auto e : {Evidence::Verified, Evidence::Confirmed, Evidence::Plausible, Evidence::Speculative}) {
        if (std::abs(score(e) - s) < 1e-12) return e;
    }
    throw ContractViolation("evidence score must be one of 1.0, 0.8, 0.5, 0.3; got " + std::to_string(s));
}

std::string_view to_string(NodeKind k) {
    switch (k) {
        case NodeKind::Observation: return "observation";
        case NodeKind::Hypothesis: return "hypothesis";
        case NodeKind::Action: return "action";
    }
    return "?";
}

std::string_view to_string(Outcome o) {
    switch (o) {
        case Outcome::Success: return "success";
        case Outcome::Partial: return "partial";
        case Outcome::Failure: return "failure";
    }
    return "?";
}

std::string_view to_string(Mode m) {
    switch (m) {
        case Mode::Recon: return "recon";
        case Mode::Exploit: return "exploit";
        case Mode::Delegate: return "delegate";
    }
    return "?";
}

std::string_view to_string(FactKind k) {
    switch (k) {
        case FactKind::Host: return "host";
        case FactKind::Service: return "service";
        case FactKind::Credential: return "credential";
        case FactKind::Session: return "session";
        case FactKind::Vulnerability: return "vulnerability";
    }
    return "?";
}

namespace {

template <typename E, std::size_t N>
E lookup(std::string_view s, const std::array<E, N>& values, const char* what) {
    for (auto v : values) {
        if (to_string(v) == s) return v;
    }
    throw ConfigError(std::string("unknown ") + what + " '" + std::string(s) + "'");
}

}  // namespace

NodeKind node_kind_from_string(std::string_view s) {
    return lookup(s, std::array{NodeKind::Observation, NodeKind::Hypothesis, NodeKind::Action}, "node kind");
}

Outcome outcome_from_string(std::string_view s) {
    return lookup(s, std::array{Outcome::Success, Outcome::Partial, Outcome::Failure}, "outcome");
}

Mode mode_from_string(std::string_view s) {
    return lookup(s, std::array{Mode::Recon, Mode::Exploit, Mode::Delegate}, "mode");
}

FactKind fact_kind_from_string(std::string_view s) {
    return lookup(s,
                  std::array{FactKind::Host, FactKind::Service, FactKind::Credential, FactKind::Session,
                             FactKind::Vulnerability},
                  "fact kind");
}

FactPattern FactPattern::parse(std::string_view text) {
    auto colon = text.find(':');
    if (colon == std::string_view::npos || colon + 1 >= text.size()) {
        throw ConfigError("fact pattern must look like 'credential:HOST', got '" + std::string(text) + "'");
    }
    FactPattern p;
    p.kind = fact_kind_from_string(text.substr(0, colon));
    p.host = std::string(text.substr(colon + 1));
    return p;
}

std::string FactPattern::str() const { return std::string(to_string(kind)) + ":" + host; }

}  // namespace egats
