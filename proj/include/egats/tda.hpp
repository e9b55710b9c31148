#pragma once

#include "egats/config.hpp"
#include "egats/tree.hpp"
#include "egats/types.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace egats {

// Min-max scaling of `node`'s raw step estimate over the given active
// branches; 0.5 when every estimate is equal (including a single branch).
double normalize_horizon(const std::map<NodeId, double>& estimates, NodeId node);

// Laplace smoothing: (successes + 1) / (attempts + 2).
double success_rate(std::uint64_t successes, std::uint64_t attempts);

// Clamped to 1.0. Throws ConfigError when window == 0.
double context_load(std::uint64_t tokens_used, std::uint64_t window);

// Mean evidence score along the root-to-node path with the root left out.
// A root scores 0.3.
double path_confidence(const AttackTree& tree, NodeId node);

// Fills `tdi` from the four components; throws ContractViolation if any
// component is outside [0,1].
TdiVector compute_tdi(TdiVector dims, const PlannerConfig& config);

Mode select_mode(double tdi, const PlannerConfig& config);

// Rubric indicator names, strongest first within each tier:
//   valid_credentials, shell_access, data_exfiltration          -> 1.0
//   cve_with_exploit, auth_bypass, injection_confirmed          -> 0.8
//   version_matched_vuln, configuration_weakness,
//   information_disclosure                                      -> 0.5
//   service_identified, attack_surface, unconfirmed_assumption  -> 0.3
struct EvidenceAssessment {
    Evidence evidence = Evidence::Speculative;
    std::vector<std::string> diagnostics;
};

// Highest applicable score. Unknown names and empty input fall back to
// speculative with a diagnostic.
EvidenceAssessment score_evidence(const std::vector<std::string>& indicators);

bool is_known_indicator(std::string_view name);

}  // namespace egats
