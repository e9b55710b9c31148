#pragma once

#include "egats/types.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace egats {

struct CredentialGrant {
    std::string principal;
    std::string secret;
    std::string scope;  // host the credential opens
};

struct SimVulnerability {
    std::string id;
    std::string tool = "metasploit";     // exploit tool the vulnerability is bound to
    std::vector<FactPattern> prerequisites;
    int steps_to_exploit = 1;
    std::vector<CredentialGrant> yields_credentials;
    std::vector<std::string> yields_flags;
    bool intractable = false;            // decoy
};

struct SimService {
    int port = 0;
    std::string name;
    std::string version;
    std::vector<SimVulnerability> vulnerabilities;
};

struct SimHost {
    std::string id;
    std::string address;
    std::string os;
    std::vector<SimService> services;
};

struct GoalSpec {
    enum class Kind { AllHosts, NamedHosts, Flags };
    Kind kind = Kind::AllHosts;
    std::vector<std::string> names;
};

struct EnvAction {
    enum class Kind { Recon, Exploit };
    Kind kind = Kind::Recon;
    Target target;                              // empty host = whole network
    std::string tool;
    std::map<std::string, std::string> params;  // exploits carry "vulnerability"
};

// Where a vulnerability lives.
struct VulnRef {
    std::string host;
    int port = 0;
    const SimVulnerability* vuln = nullptr;
};

inline constexpr int kUnreachable = -1;

// Declarative multi-host attack graph plus the attacker's progress in it.
class SimEnvironment {
public:
    std::string name;
    std::vector<SimHost> hosts;
    GoalSpec goal;
    std::vector<std::string> unavailable_tools;

    // Throws ConfigError on structural problems (unknown prerequisite
    // hosts, steps < 1, duplicate ids).
    void validate() const;

    const SimHost* host(std::string_view id) const;
    std::optional<VulnRef> vulnerability(std::string_view id) const;
    std::vector<VulnRef> all_vulnerabilities() const;

    // Deterministic tagged tool output. Throws EnvironmentError for unknown
    // targets.
    std::string step(const EnvAction& action);

    // Attacker progress.
    void reset();
    bool compromised(std::string_view host) const { return compromised_.count(std::string(host)) > 0; }
    const std::set<std::string>& compromised_hosts() const { return compromised_; }
    bool holds(const FactPattern& p) const;
    int progress(std::string_view vuln_id) const;
    bool completed(std::string_view vuln_id) const;

    // Ground-truth remaining steps, or kUnreachable: exploit stages left plus,
    // per unmet prerequisite, the cheapest granting exploit and one hop to
    // carry the credential over.
    int steps_to_exploit(std::string_view vuln_id) const;
    int steps_to_compromise(std::string_view host) const;
    // Cheapest remaining compromise of any host not yet compromised.
    int steps_to_next_compromise() const;

    // Hosts the goal names (all hosts for AllHosts).
    std::set<std::string> goal_hosts() const;

    // Canonical YAML of the definition (progress excluded).
    std::string to_yaml() const;
    std::string hash() const;

private:
    int cost(const SimVulnerability& v, std::set<std::string>& visiting) const;

    std::map<std::string, int> progress_;
    std::set<std::string> compromised_;
    std::set<std::string> held_credentials_;  // scopes
};

SimEnvironment parse_env(std::string_view yaml_text);
SimEnvironment load_env(const std::filesystem::path& path);

// Fixed point of every non-decoy vulnerability whose prerequisites are
// satisfied, starting from no facts.
std::set<std::string> oracle_reachable(const SimEnvironment& env);

struct GenShape {
    int hosts = 5;
    int chain_depth = 3;   // gated hops after the entry host
    int decoys = 1;
};

// Seeded environment: an open entry host, a credential chain of
// `chain_depth` gated hops, `decoys` intractable vulnerabilities, and
// hardened or side-gated filler hosts. Throws ConfigError on infeasible
// shapes.
SimEnvironment generate_env(std::uint64_t seed, const GenShape& shape);

}  // namespace egats
