#include "egats/sim.hpp"

#include "egats/config.hpp"
#include "egats/errors.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace egats {

namespace {

std::string host_line(const SimHost& h) { return h.id + " (" + h.address + ")"; }

bool tool_unavailable(const SimEnvironment& env, const std::string& tool) {
    return std::find(env.unavailable_tools.begin(), env.unavailable_tools.end(), tool) != env.unavailable_tools.end();
}

// Repetitive module chatter that real exploit runs produce before giving up.
std::string failure_log(const std::string& tool, const std::string& where, int lines) {
    std::ostringstream os;
    os << "[*] " << tool << " started against " << where << "\n";
    for (int i = 1; i <= lines; ++i) {
        os << "[*] " << where << " - attempt " << i << ": sending payload variant " << i
           << " (" << 512 + 37 * i << " bytes), waiting for callback... no response\n";
    }
    return os.str();
}

constexpr int kFailureLogLines = 16;

// Honeypot-style services answer every probe with something that almost
// matches.
std::string inconclusive_probes(const std::string& where, const std::string& version, int lines) {
    std::ostringstream os;
    for (int i = 1; i <= lines; ++i) {
        os << "[WRN] " << where << " probe " << i << "/" << lines << ": banner '" << version
           << "' matched, payload response inconsistent, retrying with alternate encoding\n";
    }
    return os.str();
}

constexpr int kProbeLines = 12;

}  // namespace

void SimEnvironment::validate() const {
    if (name.empty()) throw ConfigError("env: name is required");
    if (hosts.empty()) throw ConfigError("env: at least one host is required");
    std::set<std::string> ids;
    std::set<std::string> vuln_ids;
    for (const auto& h : hosts) {
        if (h.id.empty()) throw ConfigError("env: host id is required");
        if (!ids.insert(h.id).second) throw ConfigError("env: duplicate host id " + h.id);
        for (const auto& s : h.services) {
            if (s.port < 1 || s.port > 65535) throw ConfigError("env: bad port on host " + h.id);
            for (const auto& v : s.vulnerabilities) {
                if (v.id.empty()) throw ConfigError("env: vulnerability id is required on host " + h.id);
                if (!vuln_ids.insert(v.id).second) throw ConfigError("env: duplicate vulnerability id " + v.id);
                if (v.steps_to_exploit < 1) throw ConfigError("env: steps must be >= 1 for " + v.id);
            }
        }
    }
    for (const auto& ref : all_vulnerabilities()) {
        for (const auto& p : ref.vuln->prerequisites) {
            if (!ids.count(p.host)) throw ConfigError("env: " + ref.vuln->id + " needs unknown host " + p.host);
        }
        for (const auto& c : ref.vuln->yields_credentials) {
            if (!ids.count(c.scope)) throw ConfigError("env: " + ref.vuln->id + " yields credential for unknown host");
        }
    }
    for (const auto& g : goal.names) {
        if (goal.kind == GoalSpec::Kind::NamedHosts && !ids.count(g)) {
            throw ConfigError("env: goal names unknown host " + g);
        }
    }
}

const SimHost* SimEnvironment::host(std::string_view id) const {
    for (const auto& h : hosts) {
        if (h.id == id) return &h;
    }
    return nullptr;
}

std::vector<VulnRef> SimEnvironment::all_vulnerabilities() const {
    std::vector<VulnRef> out;
    for (const auto& h : hosts) {
        for (const auto& s : h.services) {
            for (const auto& v : s.vulnerabilities) out.push_back({h.id, s.port, &v});
        }
    }
    return out;
}

std::optional<VulnRef> SimEnvironment::vulnerability(std::string_view id) const {
    for (const auto& r : all_vulnerabilities()) {
        if (r.vuln->id == id) return r;
    }
    return std::nullopt;
}

void SimEnvironment::reset() {
    progress_.clear();
    compromised_.clear();
    held_credentials_.clear();
}

bool SimEnvironment::holds(const FactPattern& p) const {
    switch (p.kind) {
        case FactKind::Credential: return held_credentials_.count(p.host) > 0;
        case FactKind::Session: return compromised_.count(p.host) > 0;
        default: return false;
    }
}

int SimEnvironment::progress(std::string_view vuln_id) const {
    auto it = progress_.find(std::string(vuln_id));
    return it == progress_.end() ? 0 : it->second;
}

bool SimEnvironment::completed(std::string_view vuln_id) const {
    auto ref = vulnerability(vuln_id);
    return ref && !ref->vuln->intractable && progress(vuln_id) >= ref->vuln->steps_to_exploit;
}

std::string SimEnvironment::step(const EnvAction& action) {
    if (!action.target.host.empty() && !host(action.target.host)) {
        throw EnvironmentError("no host '" + action.target.host + "' in environment " + name);
    }
    if (tool_unavailable(*this, action.tool)) return "bash: " + action.tool + ": command not found\n";

    std::ostringstream os;
    if (action.kind == EnvAction::Kind::Recon) {
        if (action.target.host.empty()) {
            os << "Starting Nmap 7.94 ( https://nmap.org )\n";
            for (const auto& h : hosts) os << "Nmap scan report for " << host_line(h) << "\nHost is up.\n";
            os << "Nmap done: " << hosts.size() << " IP addresses (" << hosts.size() << " hosts up)\n";
            return os.str();
        }
        const auto& h = *host(action.target.host);
        if (action.tool == "linpeas") {
            if (!compromised(h.id)) return "[-] linpeas: no session on " + h.id + "\n";
            os << "== Basic information ==\nOS: " << (h.os.empty() ? "linux" : h.os) << "\nHostname: " << h.id
               << "\n[+] Current user context established on " << h.id << "\n"
               << "[+] Interesting files: /etc/passwd readable, no new secrets\n";
            return os.str();
        }
        if (!action.target.port) {
            if (action.tool == "masscan") {
                for (const auto& s : h.services) {
                    os << "Discovered open port " << s.port << "/tcp on " << h.address << " (" << h.id << ")\n";
                }
                return os.str();
            }
            os << "Nmap scan report for " << host_line(h) << "\nPORT     STATE SERVICE VERSION\n";
            for (const auto& s : h.services) {
                os << s.port << "/tcp open " << s.name;
                if (!s.version.empty()) os << " " << s.version;
                os << "\n";
            }
            return os.str();
        }
        const SimService* svc = nullptr;
        for (const auto& s : h.services) {
            if (s.port == *action.target.port) svc = &s;
        }
        if (!svc) throw EnvironmentError("no service on " + h.id + ":" + std::to_string(*action.target.port));
        bool any = false;
        for (const auto& v : svc->vulnerabilities) {
            any = true;
            if (v.intractable) {
                os << inconclusive_probes(h.id + ":" + std::to_string(svc->port), svc->version, kProbeLines);
                os << "[" << v.id << "] [network] [medium] " << h.id << ":" << svc->port << " [" << svc->version
                   << "] version-match\n";
            } else {
                os << "[" << v.id << "] [network] [high] " << h.id << ":" << svc->port << " [" << svc->version
                   << "] exploit-available\n";
            }
        }
        if (!any) os << "[INF] No results found on " << h.id << ":" << svc->port << "\n";
        return os.str();
    }

    // Exploit.
    auto vit = action.params.find("vulnerability");
    if (vit == action.params.end()) throw EnvironmentError("exploit action without a vulnerability");
    auto ref = vulnerability(vit->second);
    if (!ref || ref->host != action.target.host) {
        throw EnvironmentError("no vulnerability '" + vit->second + "' on " + action.target.host);
    }
    const auto& v = *ref->vuln;
    const std::string where = ref->host + ":" + std::to_string(ref->port);
    if (v.intractable) {
        os << failure_log(action.tool, where, kFailureLogLines);
        os << "[-] Exploit failed: target " << where << " did not yield a session\n";
        return os.str();
    }
    for (const auto& p : v.prerequisites) {
        if (!holds(p)) {
            os << failure_log(action.tool, where, kFailureLogLines / 4);
            os << "[-] Authentication failed for " << where << ": no valid credential\n";
            return os.str();
        }
    }
    int& done = progress_[v.id];
    if (done + 1 < v.steps_to_exploit) {
        done += 1;
        os << "[*] Stage " << done << "/" << v.steps_to_exploit << " complete on " << where
           << ": injection confirmed, payload staged\n";
        return os.str();
    }
    done = v.steps_to_exploit;
    compromised_.insert(ref->host);
    for (const auto& c : v.yields_credentials) held_credentials_.insert(c.scope);
    if (action.tool == "hydra") {
        os << "[" << ref->port << "][ssh] host: " << ref->host << "   login: root   password: ********\n"
           << "1 of 1 target successfully completed, 1 valid password found\n";
    }
    os << "[+] Session opened on " << ref->host << " via " << where << "\n";
    for (const auto& c : v.yields_credentials) {
        os << "[+] Found credential " << c.principal << ":" << c.secret << " for " << c.scope << "\n";
    }
    for (const auto& f : v.yields_flags) os << "[+] Flag captured: " << f << "\n";
    return os.str();
}

int SimEnvironment::cost(const SimVulnerability& v, std::set<std::string>& visiting) const {
    if (v.intractable) return kUnreachable;
    int total = std::max(0, v.steps_to_exploit - progress(v.id));
    if (total == 0) return 0;
    if (!visiting.insert(v.id).second) return kUnreachable;
    for (const auto& p : v.prerequisites) {
        if (holds(p)) continue;
        int best = kUnreachable;
        for (const auto& r : all_vulnerabilities()) {
            const auto& w = *r.vuln;
            bool grants = false;
            if (p.kind == FactKind::Credential) {
                grants = std::any_of(w.yields_credentials.begin(), w.yields_credentials.end(),
                                     [&](const CredentialGrant& g) { return g.scope == p.host; });
            } else if (p.kind == FactKind::Session) {
                grants = r.host == p.host;
            }
            if (!grants) continue;
            int c = cost(w, visiting);
            if (c != kUnreachable && (best == kUnreachable || c + 1 < best)) best = c + 1;
        }
        if (best == kUnreachable) {
            visiting.erase(v.id);
            return kUnreachable;
        }
        total += best;
    }
    visiting.erase(v.id);
    return total;
}

int SimEnvironment::steps_to_exploit(std::string_view vuln_id) const {
    auto ref = vulnerability(vuln_id);
    if (!ref) return kUnreachable;
    std::set<std::string> visiting;
    return cost(*ref->vuln, visiting);
}

int SimEnvironment::steps_to_compromise(std::string_view host_id) const {
    const auto* h = host(host_id);
    if (!h) return kUnreachable;
    int best = kUnreachable;
    for (const auto& s : h->services) {
        for (const auto& v : s.vulnerabilities) {
            std::set<std::string> visiting;
            int c = cost(v, visiting);
            if (c != kUnreachable && (best == kUnreachable || c < best)) best = c;
        }
    }
    return best;
}

int SimEnvironment::steps_to_next_compromise() const {
    int best = kUnreachable;
    for (const auto& h : hosts) {
        if (compromised(h.id)) continue;
        int c = steps_to_compromise(h.id);
        if (c != kUnreachable && (best == kUnreachable || c < best)) best = c;
    }
    return best;
}

std::set<std::string> SimEnvironment::goal_hosts() const {
    std::set<std::string> out;
    if (goal.kind == GoalSpec::Kind::NamedHosts) {
        out.insert(goal.names.begin(), goal.names.end());
    } else if (goal.kind == GoalSpec::Kind::AllHosts) {
        for (const auto& h : hosts) out.insert(h.id);
    }
    return out;
}

std::set<std::string> oracle_reachable(const SimEnvironment& env) {
    std::set<std::string> compromised;
    std::set<std::string> creds;
    std::set<std::string> applied;
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& r : env.all_vulnerabilities()) {
            const auto& v = *r.vuln;
            if (v.intractable || applied.count(v.id)) continue;
            bool ok = std::all_of(v.prerequisites.begin(), v.prerequisites.end(), [&](const FactPattern& p) {
                if (p.kind == FactKind::Credential) return creds.count(p.host) > 0;
                if (p.kind == FactKind::Session) return compromised.count(p.host) > 0;
                return false;
            });
            if (!ok) continue;
            applied.insert(v.id);
            compromised.insert(r.host);
            for (const auto& c : v.yields_credentials) creds.insert(c.scope);
            changed = true;
        }
    }
    return compromised;
}

// --- YAML --------------------------------------------------------------------

namespace {

template <typename T>
T get(const YAML::Node& n, const char* key, const std::string& where) {
    if (!n[key]) throw ConfigError("env: " + where + ": missing '" + key + "'");
    try {
        return n[key].as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError("env: " + where + ": bad '" + key + "'");
    }
}

template <typename T>
T get_or(const YAML::Node& n, const char* key, T fallback) {
    if (!n[key]) return fallback;
    try {
        return n[key].as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError(std::string("env: bad '") + key + "'");
    }
}

void only_keys(const YAML::Node& n, std::initializer_list<std::string_view> allowed, const std::string& where) {
    if (!n.IsMap()) throw ConfigError("env: " + where + " must be a mapping");
    for (const auto& kv : n) {
        const auto key = kv.first.as<std::string>();
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ConfigError("env: " + where + ": unknown key '" + key + "'");
        }
    }
}

}  // namespace

SimEnvironment parse_env(std::string_view text) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(text));
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("env: ") + e.what());
    }
    if (!root.IsMap()) throw ConfigError("env: top level must be a mapping");
    only_keys(root, {"name", "goal", "hosts", "unavailable_tools"}, "environment");
    SimEnvironment env;
    env.name = get<std::string>(root, "name", "environment");
    if (root["unavailable_tools"]) env.unavailable_tools = get<std::vector<std::string>>(root, "unavailable_tools", "environment");
    if (!root["hosts"] || !root["hosts"].IsSequence()) throw ConfigError("env: 'hosts' must be a list");
    for (const auto& hn : root["hosts"]) {
        only_keys(hn, {"id", "address", "os", "services"}, "host");
        SimHost h;
        h.id = get<std::string>(hn, "id", "host");
        h.address = get_or<std::string>(hn, "address", h.id);
        h.os = get_or<std::string>(hn, "os", "");
        for (const auto& sn : hn["services"]) {
            SimService s;
            const std::string where = "host " + h.id;
            only_keys(sn, {"port", "name", "version", "vulnerabilities"}, where);
            s.port = get<int>(sn, "port", where);
            s.name = get<std::string>(sn, "name", where);
            s.version = get_or<std::string>(sn, "version", "");
            for (const auto& vn : sn["vulnerabilities"]) {
                only_keys(vn, {"id", "tool", "steps", "decoy", "prerequisites", "yields"}, where);
                SimVulnerability v;
                v.id = get<std::string>(vn, "id", where);
                v.tool = get_or<std::string>(vn, "tool", "metasploit");
                v.steps_to_exploit = get_or<int>(vn, "steps", 1);
                v.intractable = get_or<bool>(vn, "decoy", false);
                for (const auto& p : get_or<std::vector<std::string>>(vn, "prerequisites", {})) {
                    v.prerequisites.push_back(FactPattern::parse(p));
                }
                if (auto y = vn["yields"]) {
                    only_keys(y, {"credentials", "flags"}, v.id + " yields");
                    for (const auto& cn : y["credentials"]) {
                        CredentialGrant c;
                        c.principal = get<std::string>(cn, "principal", v.id);
                        c.secret = get_or<std::string>(cn, "secret", "");
                        c.scope = get<std::string>(cn, "scope", v.id);
                        v.yields_credentials.push_back(std::move(c));
                    }
                    v.yields_flags = get_or<std::vector<std::string>>(y, "flags", {});
                }
                s.vulnerabilities.push_back(std::move(v));
            }
            h.services.push_back(std::move(s));
        }
        env.hosts.push_back(std::move(h));
    }
    if (auto g = root["goal"]) {
        if (!g.IsMap()) throw ConfigError("env: goal must be a mapping ('hosts', 'flags' or 'all_hosts: true')");
        only_keys(g, {"hosts", "flags", "all_hosts"}, "goal");
        if (g["hosts"]) {
            env.goal.kind = GoalSpec::Kind::NamedHosts;
            env.goal.names = get<std::vector<std::string>>(g, "hosts", "goal");
        } else if (g["flags"]) {
            env.goal.kind = GoalSpec::Kind::Flags;
            env.goal.names = get<std::vector<std::string>>(g, "flags", "goal");
        } else if (get_or<bool>(g, "all_hosts", false)) {
            env.goal.kind = GoalSpec::Kind::AllHosts;
        } else {
            throw ConfigError("env: goal needs 'hosts', 'flags' or 'all_hosts: true'");
        }
    }
    env.validate();
    return env;
}

SimEnvironment load_env(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("env: cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_env(ss.str());
}

std::string SimEnvironment::to_yaml() const {
    YAML::Emitter out;
    out << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << name;
    out << YAML::Key << "goal" << YAML::Value << YAML::BeginMap;
    switch (goal.kind) {
        case GoalSpec::Kind::AllHosts: out << YAML::Key << "all_hosts" << YAML::Value << true; break;
        case GoalSpec::Kind::NamedHosts:
            out << YAML::Key << "hosts" << YAML::Value << YAML::Flow << goal.names;
            break;
        case GoalSpec::Kind::Flags: out << YAML::Key << "flags" << YAML::Value << YAML::Flow << goal.names; break;
    }
    out << YAML::EndMap;
    if (!unavailable_tools.empty()) {
        out << YAML::Key << "unavailable_tools" << YAML::Value << YAML::Flow << unavailable_tools;
    }
    out << YAML::Key << "hosts" << YAML::Value << YAML::BeginSeq;
    for (const auto& h : hosts) {
        out << YAML::BeginMap << YAML::Key << "id" << YAML::Value << h.id;
        out << YAML::Key << "address" << YAML::Value << h.address;
        if (!h.os.empty()) out << YAML::Key << "os" << YAML::Value << h.os;
        out << YAML::Key << "services" << YAML::Value << YAML::BeginSeq;
        for (const auto& s : h.services) {
            out << YAML::BeginMap << YAML::Key << "port" << YAML::Value << s.port;
            out << YAML::Key << "name" << YAML::Value << s.name;
            if (!s.version.empty()) out << YAML::Key << "version" << YAML::Value << s.version;
            if (!s.vulnerabilities.empty()) {
                out << YAML::Key << "vulnerabilities" << YAML::Value << YAML::BeginSeq;
                for (const auto& v : s.vulnerabilities) {
                    out << YAML::BeginMap << YAML::Key << "id" << YAML::Value << v.id;
                    out << YAML::Key << "tool" << YAML::Value << v.tool;
                    out << YAML::Key << "steps" << YAML::Value << v.steps_to_exploit;
                    if (v.intractable) out << YAML::Key << "decoy" << YAML::Value << true;
                    if (!v.prerequisites.empty()) {
                        std::vector<std::string> pre;
                        for (const auto& p : v.prerequisites) pre.push_back(p.str());
                        out << YAML::Key << "prerequisites" << YAML::Value << YAML::Flow << pre;
                    }
                    if (!v.yields_credentials.empty() || !v.yields_flags.empty()) {
                        out << YAML::Key << "yields" << YAML::Value << YAML::BeginMap;
                        if (!v.yields_credentials.empty()) {
                            out << YAML::Key << "credentials" << YAML::Value << YAML::BeginSeq;
                            for (const auto& c : v.yields_credentials) {
                                out << YAML::Flow << YAML::BeginMap << YAML::Key << "principal" << YAML::Value
                                    << c.principal << YAML::Key << "secret" << YAML::Value << c.secret
                                    << YAML::Key << "scope" << YAML::Value << c.scope << YAML::EndMap;
                            }
                            out << YAML::EndSeq;
                        }
                        if (!v.yields_flags.empty()) {
                            out << YAML::Key << "flags" << YAML::Value << YAML::Flow << v.yields_flags;
                        }
                        out << YAML::EndMap;
                    }
                    out << YAML::EndMap;
                }
                out << YAML::EndSeq;
            }
            out << YAML::EndMap;
        }
        out << YAML::EndSeq << YAML::EndMap;
    }
    out << YAML::EndSeq << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

std::string SimEnvironment::hash() const { return fnv1a_hex(to_yaml()); }

// --- generator ---------------------------------------------------------------

namespace {

struct ServiceTemplate {
    int port;
    const char* name;
    const char* version;
    const char* tool;
    bool needs_credential = false;
};

constexpr ServiceTemplate kVulnerable[] = {
    {22, "ssh", "OpenSSH 7.2p2", "hydra"},
    {80, "http", "Apache httpd 2.4.29", "sqlmap"},
    {445, "microsoft-ds", "Samba smbd 4.6.2", "impacket", true},
    {5985, "wsman", "Microsoft HTTPAPI httpd 2.0", "evil-winrm", true},
    {21, "ftp", "vsftpd 2.3.4", "metasploit"},
};

constexpr ServiceTemplate kDecoy[] = {
    {8080, "http-proxy", "Jetty 9.4.z", "metasploit"},
    {3306, "mysql", "MySQL 5.7.33", "metasploit"},
    {6379, "redis", "Redis key-value store 4.0.9", "metasploit"},
    {8443, "https-alt", "nginx 1.18.0", "metasploit"},
};

constexpr ServiceTemplate kHardened[] = {
    {53, "domain", "ISC BIND 9.16", ""},
    {123, "ntp", "", ""},
    {443, "https", "nginx 1.25.3", ""},
};

}  // namespace

SimEnvironment generate_env(std::uint64_t seed, const GenShape& shape) {
    if (shape.hosts < 1 || shape.hosts > 26) throw ConfigError("generate_env: hosts must be in [1, 26]");
    if (shape.chain_depth < 1) throw ConfigError("generate_env: chain depth must be >= 1");
    if (shape.chain_depth + 1 > shape.hosts) {
        throw ConfigError("generate_env: a chain of depth " + std::to_string(shape.chain_depth) + " needs " +
                          std::to_string(shape.chain_depth + 1) + " hosts");
    }
    if (shape.decoys < 0) throw ConfigError("generate_env: decoys must be >= 0");

    std::mt19937_64 rng(seed);
    auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };

    SimEnvironment env;
    env.name = "gen-" + std::to_string(seed) + "-h" + std::to_string(shape.hosts) + "-d" +
               std::to_string(shape.chain_depth) + "-x" + std::to_string(shape.decoys);
    std::vector<std::string> ids;
    for (int i = 0; i < shape.hosts; ++i) {
        SimHost h;
        h.id = std::string(1, static_cast<char>('A' + i));
        h.address = "10.0." + std::to_string(seed % 200) + "." + std::to_string(10 + i);
        h.os = pick(2) ? "linux" : "windows";
        ids.push_back(h.id);
        env.hosts.push_back(std::move(h));
    }
    std::vector<int> order(shape.hosts);
    for (int i = 0; i < shape.hosts; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);

    int vuln_counter = 0;
    auto next_id = [&](const char* prefix) {
        return std::string(prefix) + "-" + std::to_string(seed) + "-" + std::to_string(++vuln_counter);
    };

    for (int hop = 0; hop <= shape.chain_depth; ++hop) {
        auto& h = env.hosts[order[hop]];
        // The entry hop has no credential, so credential-bound tools are out.
        const auto* tp = &kVulnerable[pick(std::size(kVulnerable))];
        while (hop == 0 && tp->needs_credential) tp = &kVulnerable[pick(std::size(kVulnerable))];
        const auto& t = *tp;
        SimService s{t.port, t.name, t.version, {}};
        SimVulnerability v;
        v.id = next_id("VULN");
        v.tool = t.tool;
        v.steps_to_exploit = 1 + static_cast<int>(pick(2));
        if (hop > 0) v.prerequisites.push_back({FactKind::Credential, h.id});
        if (hop < shape.chain_depth) {
            const auto& next = env.hosts[order[hop + 1]].id;
            v.yields_credentials.push_back({"svc_" + next, "hash" + std::to_string(rng() % 100000), next});
        }
        s.vulnerabilities.push_back(std::move(v));
        h.services.push_back(std::move(s));
    }
    for (int i = shape.chain_depth + 1; i < shape.hosts; ++i) {
        auto& h = env.hosts[order[i]];
        if (pick(3) == 0) {
            // Side branch opened by a credential dropped somewhere on the chain.
            const auto& t = kVulnerable[pick(std::size(kVulnerable))];
            SimService s{t.port, t.name, t.version, {}};
            SimVulnerability v;
            v.id = next_id("VULN");
            v.tool = t.tool;
            v.prerequisites.push_back({FactKind::Credential, h.id});
            s.vulnerabilities.push_back(std::move(v));
            h.services.push_back(std::move(s));
            auto& giver = env.hosts[order[pick(static_cast<std::size_t>(shape.chain_depth) + 1)]];
            giver.services.front().vulnerabilities.front().yields_credentials.push_back(
                {"svc_" + h.id, "hash" + std::to_string(rng() % 100000), h.id});
        } else {
            const auto& t = kHardened[pick(std::size(kHardened))];
            h.services.push_back({t.port, t.name, t.version, {}});
        }
    }
    for (int d = 0; d < shape.decoys; ++d) {
        auto& h = env.hosts[pick(env.hosts.size())];
        const auto& t = kDecoy[d % std::size(kDecoy)];
        bool clash = std::any_of(h.services.begin(), h.services.end(), [&](const SimService& s) { return s.port == t.port; });
        SimService s{clash ? t.port + 1 + d : t.port, t.name, t.version, {}};
        SimVulnerability v;
        v.id = next_id("DECOY");
        v.tool = t.tool;
        v.intractable = true;
        s.vulnerabilities.push_back(std::move(v));
        h.services.push_back(std::move(s));
    }
    for (auto& h : env.hosts) {
        std::sort(h.services.begin(), h.services.end(), [](const SimService& a, const SimService& b) { return a.port < b.port; });
    }
    auto reachable = oracle_reachable(env);
    env.goal.kind = GoalSpec::Kind::NamedHosts;
    env.goal.names.assign(reachable.begin(), reachable.end());
    env.validate();
    return env;
}

}  // namespace egats
