#include <doctest.h>

#include "egats/errors.hpp"
#include "egats/sim.hpp"
#include "egats/tools.hpp"

#include <random>

using namespace egats;

namespace {

SimEnvironment fixture(const std::string& name) {
    return load_env(std::string(EGATS_DATA_DIR) + "/envs/" + name + ".yaml");
}

// Synchronous rounds of the unconditional-rule closure: round 0 holds the
// hosts open from the start, round k the hosts first reachable after k
// rounds of credential hand-offs.
std::map<std::string, int> layered_closure(const SimEnvironment& env) {
    std::map<std::string, int> layer;
    std::set<std::string> creds;
    for (int round = 0;; ++round) {
        std::vector<std::pair<std::string, const SimVulnerability*>> fired;
        for (const auto& r : env.all_vulnerabilities()) {
            if (r.vuln->intractable || layer.count(r.host)) continue;
            bool ok = true;
            for (const auto& p : r.vuln->prerequisites) {
                ok = ok && ((p.kind == FactKind::Credential && creds.count(p.host)) ||
                            (p.kind == FactKind::Session && layer.count(p.host)));
            }
            if (ok) fired.emplace_back(r.host, r.vuln);
        }
        if (fired.empty()) return layer;
        for (const auto& [h, v] : fired) {
            layer.emplace(h, round);
            for (const auto& c : v->yields_credentials) creds.insert(c.scope);
        }
    }
}

std::set<std::string> hosts_of(const std::map<std::string, int>& layers) {
    std::set<std::string> out;
    for (const auto& [h, _] : layers) out.insert(h);
    return out;
}

}  // namespace

TEST_CASE("oracle_reachable on the shipped fixtures") {
    CHECK(oracle_reachable(fixture("chain3")) == std::set<std::string>{"A", "C"});
    CHECK(oracle_reachable(fixture("all_decoy")).empty());
    CHECK(oracle_reachable(fixture("open5")).size() == 5);
    CHECK(oracle_reachable(fixture("goadlike5")).size() == 5);
}

TEST_CASE("property: oracle agrees with the layered closure on generated envs") {
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        GenShape shape{3 + static_cast<int>(seed % 4), 1 + static_cast<int>(seed % 2), static_cast<int>(seed % 3)};
        auto env = generate_env(seed, shape);
        auto layers = layered_closure(env);
        CHECK(oracle_reachable(env) == hosts_of(layers));
        // Every reachable host has a finite ground-truth cost and vice versa.
        for (const auto& h : env.hosts) {
            CHECK((env.steps_to_compromise(h.id) != kUnreachable) == (layers.count(h.id) > 0));
        }
    }
}

TEST_CASE("generate_env shape, determinism and infeasible shapes") {
    auto env = generate_env(7, {5, 4, 2});
    auto layers = layered_closure(env);
    int deepest = 0;
    for (const auto& [h, l] : layers) deepest = std::max(deepest, l);
    CHECK(deepest == 4);
    int gated = 0;
    for (const auto& r : env.all_vulnerabilities()) {
        if (!r.vuln->intractable && !r.vuln->prerequisites.empty() && layers.count(r.host)) ++gated;
    }
    CHECK(gated == 4);
    int decoys = 0;
    for (const auto& r : env.all_vulnerabilities()) decoys += r.vuln->intractable;
    CHECK(decoys == 2);

    CHECK(generate_env(7, {5, 4, 2}).to_yaml() == env.to_yaml());
    CHECK(generate_env(8, {5, 4, 2}).to_yaml() != env.to_yaml());
    CHECK_THROWS_AS(generate_env(7, {5, 6, 2}), ConfigError);
    CHECK_THROWS_AS(generate_env(7, {5, 0, 2}), ConfigError);
}

TEST_CASE("yaml round trip preserves the environment") {
    for (const auto& name : {"chain3", "goadlike5", "all_decoy", "open5"}) {
        auto env = fixture(name);
        auto again = parse_env(env.to_yaml());
        CHECK(again.to_yaml() == env.to_yaml());
        CHECK(again.hash() == env.hash());
    }
    auto gen = generate_env(3, {5, 3, 2});
    CHECK(parse_env(gen.to_yaml()).hash() == gen.hash());
}

TEST_CASE("parse_env rejects malformed definitions") {
    CHECK_THROWS_AS(parse_env("name: x\nhosts: 3\n"), ConfigError);
    CHECK_THROWS_AS(parse_env("name: x\ngoal: all\nhosts: []\n"), ConfigError);
    CHECK_THROWS_AS(parse_env("name: x\nhosts:\n  - {id: A, colour: red}\n"), ConfigError);
    CHECK_THROWS_AS(parse_env("name: x\nhosts:\n  - id: A\n    services:\n      - port: 1\n        name: s\n"
                              "        vulnerabilities:\n          - {id: V, intractable: true}\n"),
                    ConfigError);
    CHECK_THROWS_AS(parse_env("name: x\nhosts:\n  - id: A\n    services:\n      - port: 1\n        name: s\n"
                              "        vulnerabilities:\n          - {id: V, prerequisites: [credential:Q]}\n"),
                    ConfigError);
    CHECK_THROWS_AS(load_env("/nonexistent/env.yaml"), ConfigError);
}

TEST_CASE("step: recon output parses to plausible evidence") {
    auto env = fixture("goadlike5");
    const auto& nmap = builtin_registry().tool("nmap");
    auto out = env.step({EnvAction::Kind::Recon, {"web01", std::nullopt}, "nmap", {}});
    auto parsed = parse_output(nmap, out);
    CHECK(parsed.evidence == Evidence::Plausible);
    CHECK(std::stoi(parsed.fields.at("services")) == static_cast<int>(env.host("web01")->services.size()));
    CHECK_THROWS_AS(env.step({EnvAction::Kind::Recon, {"nohost", std::nullopt}, "nmap", {}}), EnvironmentError);
}

TEST_CASE("step: single-stage exploit succeeds and yields the credential") {
    auto env = fixture("chain3");
    // One stage on C, one on A for the credential, one hop to carry it over.
    CHECK(env.steps_to_exploit("SSH-WEAK-KEY") == 3);
    auto out = env.step({EnvAction::Kind::Exploit, {"A", 21}, "metasploit", {{"vulnerability", "CVE-2011-2523"}}});
    auto parsed = parse_output(builtin_registry().tool("metasploit"), out);
    CHECK(parsed.evidence == Evidence::Verified);
    CHECK(env.compromised("A"));
    CHECK(env.holds(FactPattern::parse("credential:C")));
    CHECK(env.steps_to_exploit("SSH-WEAK-KEY") == 1);
    CHECK(env.steps_to_exploit("SMB-ADMIN-RELAY") == kUnreachable);
    env.reset();
    CHECK_FALSE(env.compromised("A"));
}

TEST_CASE("step: decoy exploit fails and leaves state unchanged") {
    auto env = fixture("all_decoy");
    const auto before = env.compromised_hosts();
    for (int i = 0; i < 3; ++i) {
        auto out = env.step({EnvAction::Kind::Exploit, {"gate", 80}, "metasploit", {{"vulnerability", "CVE-2021-41773"}}});
        CHECK(parse_output(builtin_registry().tool("metasploit"), out).failed);
    }
    CHECK(env.compromised_hosts() == before);
    CHECK(env.progress("CVE-2021-41773") == 0);
    CHECK(env.steps_to_exploit("CVE-2021-41773") == kUnreachable);
}

TEST_CASE("unavailable tools report command not found") {
    auto env = fixture("chain3");
    env.unavailable_tools = {"nmap"};
    auto out = env.step({EnvAction::Kind::Recon, {"A", std::nullopt}, "nmap", {}});
    CHECK(parse_output(builtin_registry().tool("nmap"), out).failed);
}
