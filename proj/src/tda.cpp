#include "egats/tda.hpp"

#include "egats/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>

namespace egats {

double normalize_horizon(const std::map<NodeId, double>& estimates, NodeId node) {
    auto it = estimates.find(node);
    if (it == estimates.end()) throw NotFoundError("no horizon estimate for node " + std::to_string(node.value));
    double lo = it->second;
    double hi = it->second;
    for (const auto& [id, h] : estimates) {
        if (h < 0.0) throw ContractViolation("horizon estimates must be non-negative");
        lo = std::min(lo, h);
        hi = std::max(hi, h);
    }
    if (hi == lo) return 0.5;
    return (it->second - lo) / (hi - lo);
}

double success_rate(std::uint64_t successes, std::uint64_t attempts) {
    if (successes > attempts) throw ContractViolation("successes exceed attempts");
    return (static_cast<double>(successes) + 1.0) / (static_cast<double>(attempts) + 2.0);
}

double context_load(std::uint64_t tokens_used, std::uint64_t window) {
    if (window == 0) throw ConfigError("context window must be positive");
    return std::min(1.0, static_cast<double>(tokens_used) / static_cast<double>(window));
}

double path_confidence(const AttackTree& tree, NodeId node) {
    auto p = tree.path(node);
    if (p.size() == 1) return 0.3;
    // Rubric scores are whole tenths; summing them as integers keeps the
    // mean correctly rounded.
    long tenths = 0;
    for (std::size_t i = 1; i < p.size(); ++i) tenths += std::lround(tree.node(p[i]).evidence_score() * 10.0);
    return static_cast<double>(tenths) / (10.0 * static_cast<double>(p.size() - 1));
}

TdiVector compute_tdi(TdiVector d, const PlannerConfig& c) {
    auto check = [](double v, const char* name) {
        if (!(v >= 0.0 && v <= 1.0)) throw ContractViolation(std::string(name) + " must be in [0,1]");
    };
    check(d.horizon_norm, "horizon_norm");
    check(d.evidence_conf, "evidence_conf");
    check(d.context_load, "context_load");
    check(d.success_rate, "success_rate");
    d.tdi = c.w_h * d.horizon_norm + c.w_e * (1.0 - d.evidence_conf) + c.w_c * d.context_load +
            c.w_s * (1.0 - d.success_rate);
    // Rounding can leave the sum a hair outside the unit interval.
    d.tdi = std::clamp(d.tdi, 0.0, 1.0);
    return d;
}

Mode select_mode(double tdi, const PlannerConfig& config) {
    if (tdi > config.theta_explore) return Mode::Recon;
    if (tdi < config.theta_exploit) return Mode::Exploit;
    return Mode::Delegate;
}

namespace {

constexpr std::array<std::pair<std::string_view, Evidence>, 12> kRubric{{
    {"valid_credentials", Evidence::Verified},
    {"shell_access", Evidence::Verified},
    {"data_exfiltration", Evidence::Verified},
    {"cve_with_exploit", Evidence::Confirmed},
    {"auth_bypass", Evidence::Confirmed},
    {"injection_confirmed", Evidence::Confirmed},
    {"version_matched_vuln", Evidence::Plausible},
    {"configuration_weakness", Evidence::Plausible},
    {"information_disclosure", Evidence::Plausible},
    {"service_identified", Evidence::Speculative},
    {"attack_surface", Evidence::Speculative},
    {"unconfirmed_assumption", Evidence::Speculative},
}};

}  // namespace

bool is_known_indicator(std::string_view name) {
    return std::any_of(kRubric.begin(), kRubric.end(), [&](const auto& r) { return r.first == name; });
}

EvidenceAssessment score_evidence(const std::vector<std::string>& indicators) {
    EvidenceAssessment out;
    if (indicators.empty()) {
        out.diagnostics.push_back("no evidence indicators; treating as speculative");
        return out;
    }
    for (const auto& name : indicators) {
        auto it = std::find_if(kRubric.begin(), kRubric.end(), [&](const auto& r) { return r.first == name; });
        if (it == kRubric.end()) {
            out.diagnostics.push_back("unrecognized evidence category '" + name + "'");
            continue;
        }
        out.evidence = strongest(out.evidence, it->second);
    }
    return out;
}

}  // namespace egats
