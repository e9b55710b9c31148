#pragma once

#include "egats/errors.hpp"
#include "egats/memory.hpp"
#include "egats/types.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace egats {

class SimEnvironment;

enum class ToolCategory {
    Reconnaissance,
    WebExploitation,
    NetworkExploitation,
    CredentialAttacks,
    ActiveDirectory,
    PrivilegeEscalation,
};

std::string to_string(ToolCategory c);
ToolCategory tool_category_from_string(std::string_view s);

enum class ParamType { String, Integer, Boolean, Host, Choice };

std::string to_string(ParamType t);
ParamType param_type_from_string(std::string_view s);

using ParamValue = std::variant<std::string, std::int64_t, bool>;

std::string render_value(const ParamValue& v);

struct ParamSpec {
    std::string name;
    ParamType type = ParamType::String;
    bool required = false;
    std::optional<std::string> default_value;
    std::optional<std::int64_t> min;       // Integer only
    std::optional<std::int64_t> max;
    std::vector<std::string> choices;      // Choice only
};

// Whether the tool observes the target or acts on it.
enum class ToolAction { Recon, Exploit };

struct ToolSpec {
    std::string name;
    ToolCategory category = ToolCategory::Reconnaissance;
    ToolAction action = ToolAction::Recon;
    std::vector<ParamSpec> input_schema;
    std::vector<std::string> output_schema;
    // Fact patterns; "{param}" is replaced by the parameter's value.
    std::vector<std::string> preconditions;
    std::vector<std::string> postconditions;
    std::string description;

    const ParamSpec* param(std::string_view name) const;
    // Throws ValidationError listing every structural problem.
    void validate() const;
};

struct Invocation {
    std::string tool;
    std::map<std::string, ParamValue> params;

    std::optional<std::string> get(const std::string& name) const;
};

struct ValidatedInvocation {
    Invocation invocation;
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }
};

// Never throws on arbitrary raw parameters; every violation names a
// parameter. Preconditions are checked only when a store is supplied.
ValidatedInvocation validate_invocation(const ToolSpec& spec, const std::map<std::string, std::string>& params,
                                        const StateStore* store = nullptr);

struct ParsedOutput {
    std::map<std::string, std::string> fields;
    std::vector<Fact> facts;              // provenance unset
    std::vector<std::string> indicators;
    Evidence evidence = Evidence::Speculative;
    std::vector<std::string> diagnostics;
    bool failed = false;                  // the tool ran but did not do its job
};

ParsedOutput parse_output(const ToolSpec& spec, std::string_view raw);

struct SkillStep {
    std::string tool;
    // Parameter bindings; "{arg}" refers to a skill argument.
    std::map<std::string, std::string> bindings;
    std::vector<std::string> fallbacks;
};

enum class Aggregator { Union, LastStep };

struct Skill {
    std::string name;
    std::vector<SkillStep> steps;
    Aggregator aggregator = Aggregator::Union;
};

class ToolRegistry {
public:
    // ConflictError on duplicate names, ValidationError on bad specs.
    void register_tool(ToolSpec spec);
    void register_skill(Skill skill);

    const ToolSpec& tool(std::string_view name) const;
    const ToolSpec* find(std::string_view name) const;
    std::vector<const ToolSpec*> by_category(ToolCategory c) const;
    const Skill& skill(std::string_view name) const;
    const std::map<std::string, ToolSpec>& tools() const { return tools_; }

    void load_dir(const std::filesystem::path& dir);

private:
    std::map<std::string, ToolSpec> tools_;
    std::map<std::string, Skill> skills_;
};

// One document: YAML front matter between "---" lines, then a free body.
ToolSpec parse_tool_doc(std::string_view text);

// The simulated tool set and the standard skills built on it.
const ToolRegistry& builtin_registry();

class ToolExecutor {
public:
    virtual ~ToolExecutor() = default;
    virtual std::string run(const ToolSpec& spec, const Invocation& invocation) = 0;
};

// Routes invocations to a simulated environment.
class SimExecutor : public ToolExecutor {
public:
    explicit SimExecutor(SimEnvironment& env) : env_(env) {}
    std::string run(const ToolSpec& spec, const Invocation& invocation) override;

private:
    SimEnvironment& env_;
};

struct Attempt {
    std::size_t step = 0;
    std::string tool;
    bool ok = false;
    std::string diagnostic;
};

struct SkillResult {
    bool success = false;
    std::vector<Attempt> attempts;
    std::vector<ParsedOutput> outputs;   // one per successful step
    std::vector<FactId> findings;
    Evidence evidence = Evidence::Speculative;
    std::string raw;                      // every attempt's output, in order

    std::string diagnostics() const;
};

// Runs steps in order, trying fallbacks in list order when a step fails.
// Findings are recorded in the store with `provenance`.
SkillResult execute_skill(const Skill& skill, const ToolRegistry& registry, ToolExecutor& executor,
                          StateStore& store, const AttackTree& tree, NodeId provenance,
                          const std::map<std::string, std::string>& args);

enum class DocKind { ToolDoc, ExploitEntry, Playbook };

std::string to_string(DocKind k);
DocKind doc_kind_from_string(std::string_view s);

struct KnowledgeDoc {
    std::string id;
    DocKind kind = DocKind::ToolDoc;
    std::string title;
    std::vector<std::string> index_terms;
    std::string body;
};

struct RankedDoc {
    const KnowledgeDoc* doc = nullptr;
    int score = 0;
};

class KnowledgeBase {
public:
    // ValidationError for empty ids or index terms, ConflictError for
    // duplicate ids.
    void add(KnowledgeDoc doc);
    void load_dir(const std::filesystem::path& dir);
    std::size_t size() const { return docs_.size(); }

    // Documents sharing at least one term with the query, by overlap
    // count then id.
    std::vector<RankedDoc> retrieve(const std::vector<std::string>& terms) const;

private:
    std::map<std::string, KnowledgeDoc> docs_;
};

KnowledgeDoc parse_knowledge_doc(std::string_view text);

}  // namespace egats
