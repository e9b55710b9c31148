#include <doctest.h>

#include "egats/errors.hpp"
#include "egats/tools.hpp"

#include <deque>
#include <random>
#include <set>

using namespace egats;

namespace {

ToolSpec scanner() {
    ToolSpec s;
    s.name = "portscan";
    s.category = ToolCategory::Reconnaissance;
    s.input_schema = {{"target", ParamType::Host, true},
                      {"port_range", ParamType::Integer, false, std::string("80"), 1, 65535}};
    s.output_schema = {"services"};
    return s;
}

// Replays canned outputs per tool name, in call order.
class ScriptedExecutor : public ToolExecutor {
public:
    std::map<std::string, std::deque<std::string>> outputs;
    std::vector<std::string> calls;
    std::string run(const ToolSpec& spec, const Invocation&) override {
        calls.push_back(spec.name);
        auto& q = outputs[spec.name];
        if (q.empty()) return "bash: " + spec.name + ": command not found\n";
        auto out = q.front();
        q.pop_front();
        return out;
    }
};

std::string nmap_one(const std::string& host, int port) {
    return "Nmap scan report for " + host + "\n" + std::to_string(port) + "/tcp open ssh OpenSSH 7.4\n";
}

}  // namespace

TEST_CASE("register_tool") {
    ToolRegistry r;
    r.register_tool(scanner());
    CHECK(r.tool("portscan").param("port_range")->max == 65535);
    CHECK_THROWS_AS(r.register_tool(scanner()), ConflictError);

    auto dup = scanner();
    dup.name = "dup";
    dup.input_schema.push_back({"target", ParamType::String});
    try {
        r.register_tool(dup);
        FAIL("expected validation error");
    } catch (const ValidationError& e) {
        CHECK(e.violations().front().parameter == "target");
    }
    CHECK_THROWS_AS(r.tool("missing"), NotFoundError);
}

TEST_CASE("validate_invocation") {
    auto spec = scanner();
    auto bad = validate_invocation(spec, {{"target", "10.0.0.5"}, {"port_range", "70000"}});
    REQUIRE(bad.violations.size() == 1);
    CHECK(bad.violations[0].parameter == "port_range");

    auto filled = validate_invocation(spec, {{"target", "10.0.0.5"}});
    REQUIRE(filled.ok());
    CHECK(filled.invocation.get("port_range") == "80");

    auto missing = validate_invocation(spec, {});
    REQUIRE(missing.violations.size() == 1);
    CHECK(missing.violations[0].parameter == "target");

    const auto& impacket = builtin_registry().tool("impacket");
    auto tree = AttackTree::init("net");
    StateStore empty;
    auto gated = validate_invocation(impacket, {{"target", "B"}, {"vulnerability", "X"}}, &empty);
    REQUIRE_FALSE(gated.ok());
    CHECK(gated.violations[0].message.find("credential:B") != std::string::npos);

    StateStore with_cred;
    with_cred.record_fact(Fact{FactKind::Credential, {{"principal", "u"}, {"scope", "B"}}}, tree);
    CHECK(validate_invocation(impacket, {{"target", "B"}, {"vulnerability", "X"}}, &with_cred).ok());
}

TEST_CASE("property: validate_invocation never throws on arbitrary input") {
    std::mt19937_64 rng(3);
    const std::vector<std::string> keys{"target", "port", "port_range", "scan_type", "vulnerability", "x", ""};
    const std::vector<std::string> values{"", "0", "-1", "65536", "80", "abc", "9999999999999999999999", "true",
                                          "discovery", " 22", "1e3"};
    for (const auto& [name, spec] : builtin_registry().tools()) {
        for (int i = 0; i < 200; ++i) {
            std::map<std::string, std::string> params;
            for (int k = 0; k < 3; ++k) params[keys[rng() % keys.size()]] = values[rng() % values.size()];
            ValidatedInvocation v;
            CHECK_NOTHROW(v = validate_invocation(spec, params));
            for (const auto& viol : v.violations) CHECK_FALSE(viol.parameter.empty());
        }
    }
}

TEST_CASE("parse_output evidence categories") {
    const auto& reg = builtin_registry();
    auto scan = parse_output(reg.tool("nmap"), nmap_one("10.0.0.5", 22));
    CHECK(scan.evidence == Evidence::Plausible);
    CHECK(scan.fields.at("services") == "1");

    auto sqli = parse_output(reg.tool("sqlmap"), "[INFO] parameter 'user' is injectable\n");
    CHECK(sqli.evidence == Evidence::Confirmed);
    CHECK(sqli.fields.at("injection") == "confirmed");

    auto login = parse_output(reg.tool("hydra"), "[22][ssh] host: 10.0.0.5   login: moshe   password: s3cret\n");
    CHECK(login.evidence == Evidence::Verified);
    REQUIRE(login.facts.size() == 1);
    CHECK(login.facts[0].attr("principal") == "moshe");

    auto negative = parse_output(reg.tool("sqlmap"), "[WARNING] parameter 'id' does not appear to be injectable\n");
    CHECK(negative.evidence == Evidence::Speculative);
}

TEST_CASE("execute_skill falls back when the primary tool fails") {
    const auto& reg = builtin_registry();
    auto tree = AttackTree::init("net");
    StateStore store;
    ScriptedExecutor exec;
    exec.outputs["masscan"] = {"Discovered open port 22/tcp on 10.0.0.5\n"};
    auto r = execute_skill(reg.skill("service_scan"), reg, exec, store, tree, NodeId{0}, {{"target", "10.0.0.5"}});
    CHECK(r.success);
    REQUIRE(r.attempts.size() == 2);
    CHECK_FALSE(r.attempts[0].ok);
    CHECK(r.attempts[1].ok);
    CHECK(exec.calls == std::vector<std::string>{"nmap", "masscan"});
}

TEST_CASE("execute_skill reports every attempt when all alternatives fail") {
    const auto& reg = builtin_registry();
    auto tree = AttackTree::init("net");
    StateStore store;
    ScriptedExecutor exec;
    auto r = execute_skill(reg.skill("service_scan"), reg, exec, store, tree, NodeId{0}, {{"target", "10.0.0.5"}});
    CHECK_FALSE(r.success);
    CHECK(r.attempts.size() == 2);
    CHECK(r.diagnostics().find("nmap") != std::string::npos);
    CHECK(r.diagnostics().find("masscan") != std::string::npos);
    CHECK(store.facts().empty());
}

TEST_CASE("execute_skill aggregates findings over steps") {
    const auto& reg = builtin_registry();
    auto tree = AttackTree::init("net");
    StateStore store;
    ScriptedExecutor exec;
    exec.outputs["nmap"] = {"22/tcp open ssh\n", "80/tcp open http\n"};
    // Port lines need a host header; prefix each canned output with one.
    for (auto& o : exec.outputs["nmap"]) o = "Nmap scan report for h1\n" + o;
    Skill two{"two_scans",
              {{"nmap", {{"target", "{target}"}}, {}}, {"nmap", {{"target", "{target}"}}, {}}},
              Aggregator::Union};
    auto r = execute_skill(two, reg, exec, store, tree, NodeId{0}, {{"target", "h1"}});
    CHECK(r.success);
    CHECK(store.facts_of(FactKind::Service).size() == 2);
    // Host fact from both outputs merges into one.
    CHECK(r.findings.size() == 3);
}

TEST_CASE("skill fallbacks must be compatible") {
    ToolRegistry r;
    for (const auto& [n, t] : builtin_registry().tools()) r.register_tool(t);
    CHECK_THROWS_AS(r.register_skill({"bad", {{"nmap", {}, {"hydra"}}}, Aggregator::Union}), ValidationError);
    CHECK_THROWS_AS(r.register_skill({"ghost", {{"nmap", {}, {"nothing"}}}, Aggregator::Union}), ValidationError);
}

TEST_CASE("tool documents load from the shipped corpus") {
    ToolRegistry r;
    r.load_dir(std::string(EGATS_DATA_DIR) + "/tools");
    CHECK(r.tools().size() >= 10);
    std::set<ToolCategory> cats;
    for (const auto& [n, t] : r.tools()) cats.insert(t.category);
    CHECK(cats.size() == 6);
    CHECK_THROWS_AS(parse_tool_doc("no front matter"), ConfigError);
}

TEST_CASE("retrieve_knowledge") {
    KnowledgeBase kb;
    kb.load_dir(std::string(EGATS_DATA_DIR) + "/knowledge");
    auto hits = kb.retrieve({"hash", "0e", "comparison"});
    REQUIRE_FALSE(hits.empty());
    CHECK(hits[0].doc->id == "playbook-php-type-juggling");
    CHECK(hits[0].doc->kind == DocKind::Playbook);
    CHECK(kb.retrieve({"quantum"}).empty());

    KnowledgeBase small;
    small.add({"b-doc", DocKind::ToolDoc, "B", {"smb"}, ""});
    small.add({"a-doc", DocKind::ToolDoc, "A", {"smb"}, ""});
    auto tie = small.retrieve({"smb"});
    REQUIRE(tie.size() == 2);
    CHECK(tie[0].doc->id == "a-doc");
    CHECK_THROWS_AS(small.add({"a-doc", DocKind::ToolDoc, "A", {"x"}, ""}), ConflictError);
    CHECK_THROWS_AS(small.add({"c-doc", DocKind::ToolDoc, "C", {}, ""}), ValidationError);
}
