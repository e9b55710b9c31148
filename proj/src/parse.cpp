#include "egats/tda.hpp"
#include "egats/tools.hpp"

#include <algorithm>
#include <regex>

namespace egats {

namespace {

struct Patterns {
    std::regex nmap_host{R"(^Nmap scan report for (\S+)(?: \(([^)\s]+)\))?)"};
    std::regex nmap_port{R"(^(\d{1,5})/tcp\s+open\s+(\S+)(?:\s+(\S.*?))?\s*$)"};
    std::regex masscan{R"(^Discovered open port (\d{1,5})/tcp on (\S+)(?: \(([^)\s]+)\))?)"};
    std::regex finding{R"(^\[([^\]\s]+)\] \[[^\]]*\] \[(\w+)\] ([^:\s]+):(\d{1,5})\b.*?(exploit-available|version-match)?\s*$)"};
    std::regex stage{R"(Stage (\d+)/(\d+) complete)"};
    std::regex session{R"(^\[\+\] Session opened on (\S+))"};
    std::regex credential{R"(^\[\+\] Found credential ([^:\s]+):(\S*) for (\S+))"};
    std::regex login{R"(host: (\S+)\s+login: (\S+)\s+password: (\S+))"};
    std::regex flag{R"(^\[\+\] Flag captured: (\S+))"};
};

const Patterns& patterns() {
    static const Patterns p;
    return p;
}

bool contains(std::string_view line, std::string_view needle) { return line.find(needle) != std::string_view::npos; }

bool injectable(std::string_view line) {
    if (contains(line, "injection confirmed")) return true;
    if (!contains(line, "injectable")) return false;
    return !contains(line, "not injectable") && !contains(line, "not appear to be injectable") &&
           !contains(line, "not be injectable");
}

std::size_t count_kind(const std::vector<Fact>& facts, FactKind k) {
    return std::count_if(facts.begin(), facts.end(), [&](const Fact& f) { return f.kind == k; });
}

}  // namespace

ParsedOutput parse_output(const ToolSpec& spec, std::string_view raw) {
    const auto& re = patterns();
    ParsedOutput out;
    std::string current_host;
    std::string session_host;
    std::size_t flags = 0;
    bool injection = false;

    std::size_t pos = 0;
    while (pos <= raw.size()) {
        auto nl = raw.find('\n', pos);
        std::string line(raw.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
        pos = nl == std::string_view::npos ? raw.size() + 1 : nl + 1;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::smatch m;

        if (contains(line, "command not found")) {
            out.failed = true;
            out.diagnostics.push_back(spec.name + ": tool unavailable");
            continue;
        }
        if (std::regex_search(line, m, re.nmap_host)) {
            current_host = m[1];
            Fact f{FactKind::Host, {{"hostname", m[1]}, {"address", m[2].matched ? m[2].str() : m[1].str()}}};
            out.facts.push_back(std::move(f));
            out.indicators.push_back("attack_surface");
            continue;
        }
        if (std::regex_search(line, m, re.nmap_port)) {
            if (current_host.empty()) {
                out.diagnostics.push_back("port line without a host: " + line);
                continue;
            }
            Fact f{FactKind::Service, {{"host", current_host}, {"port", m[1]}, {"name", m[2]}}};
            if (m[3].matched) f.attributes["version"] = m[3];
            out.facts.push_back(std::move(f));
            out.indicators.push_back(m[3].matched ? "version_matched_vuln" : "service_identified");
            continue;
        }
        if (std::regex_search(line, m, re.masscan)) {
            std::string host = m[3].matched ? m[3].str() : m[2].str();
            Fact h{FactKind::Host, {{"hostname", host}, {"address", m[2]}}};
            out.facts.push_back(std::move(h));
            out.facts.push_back(Fact{FactKind::Service, {{"host", host}, {"port", m[1]}}});
            out.indicators.push_back("service_identified");
            continue;
        }
        if (std::regex_search(line, m, re.finding)) {
            const std::string marker = m[5];
            Fact f{FactKind::Vulnerability,
                   {{"id", m[1]},
                    {"status", marker == "exploit-available" ? "exploitable" : "candidate"},
                    {"severity", m[2]},
                    {"host", m[3]},
                    {"port", m[4]}}};
            out.facts.push_back(std::move(f));
            if (marker == "exploit-available") {
                out.indicators.push_back("cve_with_exploit");
            } else if (marker == "version-match") {
                out.indicators.push_back("version_matched_vuln");
            } else {
                out.indicators.push_back("unconfirmed_assumption");
            }
            continue;
        }
        if (contains(line, "No results found")) {
            out.indicators.push_back("attack_surface");
            continue;
        }
        if (std::regex_search(line, m, re.session)) {
            session_host = m[1];
            out.facts.push_back(Fact{FactKind::Session, {{"host", m[1]}, {"channel", spec.name}}});
            out.indicators.push_back("shell_access");
            continue;
        }
        if (std::regex_search(line, m, re.credential)) {
            out.facts.push_back(
                Fact{FactKind::Credential, {{"principal", m[1]}, {"secret", m[2]}, {"scope", m[3]}}});
            out.indicators.push_back("valid_credentials");
            continue;
        }
        if (std::regex_search(line, m, re.login)) {
            out.facts.push_back(
                Fact{FactKind::Credential, {{"principal", m[2]}, {"secret", m[3]}, {"scope", m[1]}}});
            out.indicators.push_back("valid_credentials");
            continue;
        }
        if (std::regex_search(line, m, re.flag)) {
            Fact f{FactKind::Vulnerability, {{"id", "flag:" + m[1].str()}, {"status", "captured"}, {"flag", m[1]}}};
            if (!session_host.empty()) f.attributes["host"] = session_host;
            out.facts.push_back(std::move(f));
            out.indicators.push_back("data_exfiltration");
            ++flags;
            continue;
        }
        if (std::regex_search(line, m, re.stage)) {
            out.fields["stage"] = m[1];
            out.fields["stages"] = m[2];
        }
        if (injectable(line)) {
            injection = true;
            out.indicators.push_back("injection_confirmed");
            continue;
        }
        if (contains(line, "Exploit failed") || contains(line, "Authentication failed") ||
            contains(line, "no session on")) {
            out.failed = true;
            out.indicators.push_back("unconfirmed_assumption");
            continue;
        }
        if (contains(line, "Interesting files")) {
            out.indicators.push_back("information_disclosure");
            continue;
        }
        if (contains(line, "Current user context")) out.indicators.push_back("attack_surface");
    }

    auto assessed = score_evidence(out.indicators);
    out.evidence = assessed.evidence;
    for (auto& d : assessed.diagnostics) out.diagnostics.push_back(std::move(d));

    out.fields["tool"] = spec.name;
    for (const auto& field : spec.output_schema) {
        if (field == "hosts") {
            out.fields[field] = std::to_string(count_kind(out.facts, FactKind::Host));
        } else if (field == "services") {
            out.fields[field] = std::to_string(count_kind(out.facts, FactKind::Service));
        } else if (field == "vulnerabilities") {
            out.fields[field] = std::to_string(count_kind(out.facts, FactKind::Vulnerability) - flags);
        } else if (field == "credentials") {
            out.fields[field] = std::to_string(count_kind(out.facts, FactKind::Credential));
        } else if (field == "session") {
            out.fields[field] = session_host.empty() ? "none" : session_host;
        } else if (field == "flags") {
            out.fields[field] = std::to_string(flags);
        } else if (field == "injection") {
            out.fields[field] = injection ? "confirmed" : "none";
        } else if (field == "findings") {
            out.fields[field] = std::to_string(out.indicators.size());
        }
    }
    return out;
}

}  // namespace egats
