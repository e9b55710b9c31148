#include "egats/tools.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace egats {

namespace {

constexpr std::pair<ToolCategory, std::string_view> kCategoryNames[] = {
    {ToolCategory::Reconnaissance, "Reconnaissance"},
    {ToolCategory::WebExploitation, "WebExploitation"},
    {ToolCategory::NetworkExploitation, "NetworkExploitation"},
    {ToolCategory::CredentialAttacks, "CredentialAttacks"},
    {ToolCategory::ActiveDirectory, "ActiveDirectory"},
    {ToolCategory::PrivilegeEscalation, "PrivilegeEscalation"},
};

constexpr std::pair<ParamType, std::string_view> kTypeNames[] = {
    {ParamType::String, "string"}, {ParamType::Integer, "integer"}, {ParamType::Boolean, "boolean"},
    {ParamType::Host, "host"},     {ParamType::Choice, "choice"},
};

std::optional<std::int64_t> parse_int(std::string_view s) {
    std::int64_t v = 0;
    if (s.empty()) return std::nullopt;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
    return v;
}

bool valid_host(std::string_view s) {
    if (s.empty() || s.size() > 253) return false;
    return std::all_of(s.begin(), s.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '.' || c == '-' || c == '_' || c == ':';
    });
}

// Parses `raw` against the spec; returns an error message on failure.
std::variant<ParamValue, std::string> coerce(const ParamSpec& p, std::string_view raw) {
    switch (p.type) {
        case ParamType::String: return ParamValue(std::string(raw));
        case ParamType::Host:
            if (!valid_host(raw)) return std::string("not a host identifier");
            return ParamValue(std::string(raw));
        case ParamType::Boolean:
            if (raw == "true" || raw == "yes" || raw == "1") return ParamValue(true);
            if (raw == "false" || raw == "no" || raw == "0") return ParamValue(false);
            return std::string("not a boolean");
        case ParamType::Choice:
            if (std::find(p.choices.begin(), p.choices.end(), raw) == p.choices.end()) {
                return std::string("not one of the allowed values");
            }
            return ParamValue(std::string(raw));
        case ParamType::Integer: {
            auto v = parse_int(raw);
            if (!v) return std::string("not an integer");
            if ((p.min && *v < *p.min) || (p.max && *v > *p.max)) {
                return "value " + std::to_string(*v) + " outside range " + (p.min ? std::to_string(*p.min) : "") +
                       "-" + (p.max ? std::to_string(*p.max) : "");
            }
            return ParamValue(*v);
        }
    }
    return std::string("unknown type");
}

// Replaces "{name}" placeholders; reports the first unresolved one.
std::string substitute(std::string_view pattern, const std::map<std::string, std::string>& values,
                       std::string* missing, std::string* referenced) {
    std::string out;
    std::size_t i = 0;
    while (i < pattern.size()) {
        auto open = pattern.find('{', i);
        if (open == std::string_view::npos) break;
        auto close = pattern.find('}', open);
        if (close == std::string_view::npos) break;
        out.append(pattern.substr(i, open - i));
        std::string key(pattern.substr(open + 1, close - open - 1));
        if (referenced && referenced->empty()) *referenced = key;
        auto it = values.find(key);
        if (it == values.end()) {
            if (missing && missing->empty()) *missing = key;
        } else {
            out += it->second;
        }
        i = close + 1;
    }
    out.append(pattern.substr(i));
    return out;
}

}  // namespace

std::string to_string(ToolCategory c) {
    for (auto [k, n] : kCategoryNames) {
        if (k == c) return std::string(n);
    }
    return "Reconnaissance";
}

ToolCategory tool_category_from_string(std::string_view s) {
    for (auto [k, n] : kCategoryNames) {
        if (n == s) return k;
    }
    throw ConfigError("unknown tool category '" + std::string(s) + "'");
}

std::string to_string(ParamType t) {
    for (auto [k, n] : kTypeNames) {
        if (k == t) return std::string(n);
    }
    return "string";
}

ParamType param_type_from_string(std::string_view s) {
    for (auto [k, n] : kTypeNames) {
        if (n == s) return k;
    }
    throw ConfigError("unknown parameter type '" + std::string(s) + "'");
}

std::string render_value(const ParamValue& v) {
    if (auto s = std::get_if<std::string>(&v)) return *s;
    if (auto i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
    return std::get<bool>(v) ? "true" : "false";
}

const ParamSpec* ToolSpec::param(std::string_view n) const {
    for (const auto& p : input_schema) {
        if (p.name == n) return &p;
    }
    return nullptr;
}

void ToolSpec::validate() const {
    std::vector<Violation> v;
    if (name.empty()) v.push_back({"name", "tool name is required"});
    std::set<std::string> seen;
    for (const auto& p : input_schema) {
        if (p.name.empty()) v.push_back({"input_schema", "parameter without a name"});
        if (!seen.insert(p.name).second) v.push_back({p.name, "duplicate parameter name"});
        if (p.type == ParamType::Integer && p.min && p.max && *p.min > *p.max) {
            v.push_back({p.name, "min exceeds max"});
        }
        if (p.type != ParamType::Integer && (p.min || p.max)) v.push_back({p.name, "range on a non-integer parameter"});
        if (p.type == ParamType::Choice && p.choices.empty()) v.push_back({p.name, "choice parameter without choices"});
        if (p.default_value && p.required) v.push_back({p.name, "required parameter with a default"});
        if (p.default_value) {
            auto r = coerce(p, *p.default_value);
            if (auto err = std::get_if<std::string>(&r)) v.push_back({p.name, "default: " + *err});
        }
    }
    for (const auto& pre : preconditions) {
        std::map<std::string, std::string> probe;
        for (const auto& p : input_schema) probe[p.name] = "x";
        std::string missing;
        std::string text = substitute(pre, probe, &missing, nullptr);
        if (!missing.empty()) {
            v.push_back({missing, "precondition refers to an undeclared parameter"});
            continue;
        }
        try {
            FactPattern::parse(text);
        } catch (const Error&) {
            v.push_back({"preconditions", "malformed precondition '" + pre + "'"});
        }
    }
    if (!v.empty()) throw ValidationError(std::move(v));
}

std::optional<std::string> Invocation::get(const std::string& n) const {
    auto it = params.find(n);
    if (it == params.end()) return std::nullopt;
    return render_value(it->second);
}

ValidatedInvocation validate_invocation(const ToolSpec& spec, const std::map<std::string, std::string>& params,
                                        const StateStore* store) {
    ValidatedInvocation out;
    out.invocation.tool = spec.name;
    for (const auto& [k, _] : params) {
        if (k.empty()) {
            out.violations.push_back({"(empty)", "parameter name is empty"});
        } else if (!spec.param(k)) {
            out.violations.push_back({k, "unknown parameter"});
        }
    }
    for (const auto& p : spec.input_schema) {
        auto it = params.find(p.name);
        std::optional<std::string> raw;
        if (it != params.end()) {
            raw = it->second;
        } else if (p.default_value) {
            raw = *p.default_value;
        } else if (p.required) {
            out.violations.push_back({p.name, "missing required parameter"});
            continue;
        }
        if (!raw) continue;
        auto r = coerce(p, *raw);
        if (auto err = std::get_if<std::string>(&r)) {
            out.violations.push_back({p.name, *err});
        } else {
            out.invocation.params[p.name] = std::get<ParamValue>(r);
        }
    }
    if (store && out.ok()) {
        std::map<std::string, std::string> rendered;
        for (const auto& [k, v] : out.invocation.params) rendered[k] = render_value(v);
        for (const auto& pre : spec.preconditions) {
            std::string missing;
            std::string referenced;
            std::string text = substitute(pre, rendered, &missing, &referenced);
            const std::string blame = referenced.empty() ? (spec.input_schema.empty() ? "preconditions"
                                                                                      : spec.input_schema.front().name)
                                                         : referenced;
            if (!missing.empty()) {
                out.violations.push_back({missing, "precondition needs parameter '" + missing + "'"});
                continue;
            }
            try {
                auto pattern = FactPattern::parse(text);
                if (!store->satisfies(pattern)) {
                    out.violations.push_back({blame, "precondition " + pattern.str() + " not satisfied"});
                }
            } catch (const Error&) {
                out.violations.push_back({blame, "precondition '" + text + "' is malformed"});
            }
        }
    }
    return out;
}

// --- registry ----------------------------------------------------------------

void ToolRegistry::register_tool(ToolSpec spec) {
    if (tools_.count(spec.name)) throw ConflictError("tool '" + spec.name + "' already registered");
    spec.validate();
    auto name = spec.name;
    tools_.emplace(std::move(name), std::move(spec));
}

void ToolRegistry::register_skill(Skill skill) {
    std::vector<Violation> v;
    if (skill.name.empty()) v.push_back({"name", "skill name is required"});
    if (skills_.count(skill.name)) throw ConflictError("skill '" + skill.name + "' already registered");
    for (const auto& step : skill.steps) {
        const ToolSpec* primary = find(step.tool);
        if (!primary) {
            v.push_back({step.tool, "unregistered tool"});
            continue;
        }
        for (const auto& fb : step.fallbacks) {
            const ToolSpec* alt = find(fb);
            if (!alt) {
                v.push_back({fb, "unregistered fallback tool"});
                continue;
            }
            bool shares = alt->action == primary->action &&
                          std::any_of(alt->output_schema.begin(), alt->output_schema.end(), [&](const std::string& f) {
                              return std::find(primary->output_schema.begin(), primary->output_schema.end(), f) !=
                                     primary->output_schema.end();
                          });
            if (!shares) v.push_back({fb, "fallback does not share the output schema of " + step.tool});
        }
    }
    if (!v.empty()) throw ValidationError(std::move(v));
    auto name = skill.name;
    skills_.emplace(std::move(name), std::move(skill));
}

const ToolSpec& ToolRegistry::tool(std::string_view name) const {
    if (auto t = find(name)) return *t;
    throw NotFoundError("no tool '" + std::string(name) + "'");
}

const ToolSpec* ToolRegistry::find(std::string_view name) const {
    auto it = tools_.find(std::string(name));
    return it == tools_.end() ? nullptr : &it->second;
}

std::vector<const ToolSpec*> ToolRegistry::by_category(ToolCategory c) const {
    std::vector<const ToolSpec*> out;
    for (const auto& [_, t] : tools_) {
        if (t.category == c) out.push_back(&t);
    }
    return out;
}

const Skill& ToolRegistry::skill(std::string_view name) const {
    auto it = skills_.find(std::string(name));
    if (it == skills_.end()) throw NotFoundError("no skill '" + std::string(name) + "'");
    return it->second;
}

// --- declarative documents ---------------------------------------------------

namespace {

std::pair<YAML::Node, std::string> split_front_matter(std::string_view text) {
    auto starts = [&](std::size_t pos) { return text.compare(pos, 3, "---") == 0; };
    if (!starts(0)) throw ConfigError("document must start with a '---' front-matter block");
    auto first_nl = text.find('\n');
    if (first_nl == std::string_view::npos) throw ConfigError("unterminated front matter");
    std::size_t pos = first_nl + 1;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        if (line == "---" || line == "---\r") {
            YAML::Node meta;
            try {
                meta = YAML::Load(std::string(text.substr(first_nl + 1, pos - first_nl - 1)));
            } catch (const YAML::Exception& e) {
                throw ConfigError(std::string("front matter: ") + e.what());
            }
            std::string body = nl == std::string_view::npos ? "" : std::string(text.substr(nl + 1));
            return {meta, body};
        }
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
    throw ConfigError("unterminated front matter");
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw ConfigError("cannot open " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::filesystem::path> markdown_files(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw ConfigError("not a directory: " + dir.string());
    std::vector<std::filesystem::path> out;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".md") out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::string> string_list(const YAML::Node& n) {
    if (!n) return {};
    if (!n.IsSequence()) throw ConfigError("expected a list");
    return n.as<std::vector<std::string>>();
}

}  // namespace

ToolSpec parse_tool_doc(std::string_view text) {
    auto [meta, body] = split_front_matter(text);
    ToolSpec t;
    try {
        t.name = meta["name"].as<std::string>("");
        t.category = tool_category_from_string(meta["category"].as<std::string>(""));
        const auto action = meta["action"].as<std::string>("recon");
        if (action == "recon") {
            t.action = ToolAction::Recon;
        } else if (action == "exploit") {
            t.action = ToolAction::Exploit;
        } else {
            throw ConfigError("tool action must be recon or exploit");
        }
        for (const auto& pn : meta["params"]) {
            ParamSpec p;
            p.name = pn["name"].as<std::string>("");
            p.type = param_type_from_string(pn["type"].as<std::string>("string"));
            p.required = pn["required"].as<bool>(false);
            if (pn["default"]) p.default_value = pn["default"].as<std::string>();
            if (pn["min"]) p.min = pn["min"].as<std::int64_t>();
            if (pn["max"]) p.max = pn["max"].as<std::int64_t>();
            p.choices = string_list(pn["choices"]);
            t.input_schema.push_back(std::move(p));
        }
        t.output_schema = string_list(meta["outputs"]);
        t.preconditions = string_list(meta["preconditions"]);
        t.postconditions = string_list(meta["postconditions"]);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("tool document: ") + e.what());
    }
    auto trimmed = body;
    while (!trimmed.empty() && (trimmed.back() == '\n' || trimmed.back() == ' ')) trimmed.pop_back();
    t.description = trimmed;
    return t;
}

void ToolRegistry::load_dir(const std::filesystem::path& dir) {
    for (const auto& p : markdown_files(dir)) register_tool(parse_tool_doc(read_file(p)));
}

KnowledgeDoc parse_knowledge_doc(std::string_view text) {
    auto [meta, body] = split_front_matter(text);
    KnowledgeDoc d;
    try {
        d.id = meta["id"].as<std::string>("");
        d.kind = doc_kind_from_string(meta["kind"].as<std::string>("ToolDoc"));
        d.title = meta["title"].as<std::string>("");
        d.index_terms = string_list(meta["terms"]);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("knowledge document: ") + e.what());
    }
    d.body = body;
    return d;
}

void KnowledgeBase::load_dir(const std::filesystem::path& dir) {
    for (const auto& p : markdown_files(dir)) add(parse_knowledge_doc(read_file(p)));
}

}  // namespace egats
