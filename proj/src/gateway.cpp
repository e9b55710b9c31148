#include "egats/gateway.hpp"

#include "egats/errors.hpp"
#include "egats/sim.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <numeric>
#include <random>

namespace egats {

using json = nlohmann::ordered_json;

std::string_view to_string(Duty d) {
    switch (d) {
        case Duty::HorizonEstimate: return "horizon_estimate";
        case Duty::PromiseInit: return "promise_init";
        case Duty::ReconExpand: return "recon_expand";
        case Duty::Decide: return "decide";
        case Duty::Summarize: return "summarize";
    }
    return "decide";
}

std::string response_schema(Duty d) {
    switch (d) {
        case Duty::HorizonEstimate:
            return R"({"estimates": {"<branch id>": <non-negative integer steps to the next compromise>}})";
        case Duty::PromiseInit: return R"({"promise": <number in [0,1]>})";
        case Duty::ReconExpand:
            return R"({"proposals": [{"port": <int>, "vulnerability": "<id>", "tool": "<tool>", "preconditions": ["credential:<host>"]}]})";
        case Duty::Decide: return R"({"choice": "recon" | "exploit", "justification": "<one sentence>"})";
        case Duty::Summarize: return R"({"summary": "<text>"})";
    }
    return "{}";
}

// --- stub --------------------------------------------------------------------

StubBackend::StubBackend(const SimEnvironment& env, std::uint64_t seed, double rank_correlation)
    : env_(env), seed_(seed), rank_correlation_(rank_correlation) {}

double StubBackend::noise_sigma(double truth_stddev, double rank_correlation) {
    if (rank_correlation >= 1.0 || truth_stddev <= 0.0) return 0.0;
    // Spearman rho of a bivariate normal relates to Pearson r by
    // rho = (6/pi) asin(r/2).
    const double r = 2.0 * std::sin(std::numbers::pi * rank_correlation / 6.0);
    return truth_stddev * std::sqrt(1.0 / (r * r) - 1.0);
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}

double emitted(double truth, double noise) { return std::max(0.0, std::round(truth + noise)); }

}  // namespace

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2) return 0.0;
    const auto ra = average_ranks(a);
    const auto rb = average_ranks(b);
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
    const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        cov += (ra[i] - ma) * (rb[i] - mb);
        va += (ra[i] - ma) * (ra[i] - ma);
        vb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (va == 0.0 || vb == 0.0) return 0.0;
    return cov / std::sqrt(va * vb);
}

double StubBackend::calibrated_sigma(std::vector<double> truth, double rank_correlation) {
    if (rank_correlation >= 1.0 || truth.size() < 2) return 0.0;
    std::sort(truth.begin(), truth.end());
    if (truth.front() == truth.back()) return 0.0;

    static std::mutex mu;
    static std::map<std::pair<std::vector<double>, double>, double> cache;
    auto key = std::make_pair(truth, rank_correlation);
    {
        std::lock_guard lock(mu);
        if (auto it = cache.find(key); it != cache.end()) return it->second;
    }

    // Common random draws keep the mean correlation monotone in sigma.
    constexpr int kDraws = 256;
    std::mt19937_64 rng(0x5eed0000ULL + truth.size());
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<std::vector<double>> draws(kDraws, std::vector<double>(truth.size()));
    for (auto& d : draws) {
        for (auto& x : d) x = z(rng);
    }
    auto mean_rho = [&](double sigma) {
        double total = 0.0;
        std::vector<double> est(truth.size());
        for (const auto& d : draws) {
            for (std::size_t i = 0; i < truth.size(); ++i) est[i] = emitted(truth[i], sigma * d[i]);
            total += spearman(truth, est);
        }
        return total / kDraws;
    };

    double mean = std::accumulate(truth.begin(), truth.end(), 0.0) / static_cast<double>(truth.size());
    double var = 0.0;
    for (double t : truth) var += (t - mean) * (t - mean);
    double hi = std::max(1.0, noise_sigma(std::sqrt(var / static_cast<double>(truth.size())), rank_correlation));
    for (int i = 0; i < 20 && mean_rho(hi) > rank_correlation; ++i) hi *= 2.0;
    double lo = 0.0;
    for (int i = 0; i < 30; ++i) {
        const double mid = (lo + hi) / 2.0;
        (mean_rho(mid) > rank_correlation ? lo : hi) = mid;
    }
    const double sigma = (lo + hi) / 2.0;
    std::lock_guard lock(mu);
    cache.emplace(std::move(key), sigma);
    return sigma;
}

double StubBackend::true_distance(const json& b) const {
    const std::string binding = b.value("binding", "");
    const std::string host = b.value("host", "");
    const bool has_port = b.contains("port") && !b["port"].is_null();
    int d = kUnreachable;
    if (!binding.empty()) {
        d = env_.steps_to_exploit(binding);
    } else if (host.empty()) {
        d = env_.steps_to_next_compromise();
        if (d != kUnreachable) d += 1;
    } else if (!has_port) {
        d = (b.value("root", false) || env_.compromised(host)) ? env_.steps_to_next_compromise()
                                                                : env_.steps_to_compromise(host);
        if (d != kUnreachable) d += 1;
    }
    return d;
}

std::string StubBackend::complete(const GatewayRequest& req) {
    const auto& p = req.payload;
    json out;
    switch (req.duty) {
        case Duty::HorizonEstimate: {
            std::vector<double> truth;
            double max_finite = -1.0;
            for (const auto& b : p["branches"]) {
                truth.push_back(true_distance(b));
                max_finite = std::max(max_finite, truth.back());
            }
            const double cap = max_finite < 0 ? 20.0 : max_finite + 10.0;
            for (auto& t : truth) {
                if (t < 0) t = cap;
            }
            const double sigma = calibrated_sigma(truth, rank_correlation_);
            json est = json::object();
            std::size_t i = 0;
            for (const auto& b : p["branches"]) {
                const auto id = b["id"].get<std::uint64_t>();
                const double t = truth[i++];
                double v = t;
                if (sigma > 0.0) {
                    std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                                      static_cast<std::uint32_t>(id), static_cast<std::uint32_t>(t * 16)};
                    std::mt19937_64 rng(seq);
                    std::normal_distribution<double> noise(0.0, sigma);
                    v = emitted(t, noise(rng));
                }
                est[std::to_string(id)] = static_cast<std::int64_t>(v);
            }
            out["estimates"] = est;
            break;
        }
        case Duty::PromiseInit: {
            const double e = p["evidence"].get<double>();
            double promise = e;
            if (e >= 1.0) {
                promise = 0.9;
            } else if (e >= 0.8) {
                promise = 0.7;
            }
            out["promise"] = promise;
            break;
        }
        case Duty::ReconExpand: {
            out["proposals"] = json::array();
            const auto* h = env_.host(p["host"].get<std::string>());
            if (!h) break;
            for (const auto& s : p["services"]) {
                const int port = s["port"].get<int>();
                for (const auto& svc : h->services) {
                    if (svc.port != port) continue;
                    for (const auto& v : svc.vulnerabilities) {
                        json pre = json::array();
                        for (const auto& q : v.prerequisites) pre.push_back(q.str());
                        out["proposals"].push_back(
                            {{"port", port}, {"vulnerability", v.id}, {"tool", v.tool}, {"preconditions", pre}});
                    }
                }
            }
            break;
        }
        case Duty::Decide: {
            const double e = p["evidence"].get<double>();
            const bool exploit = e >= 0.5;
            char buf[96];
            std::snprintf(buf, sizeof buf, "path evidence %.3f is %s 0.5", e, exploit ? "at least" : "below");
            out["choice"] = exploit ? "exploit" : "recon";
            out["justification"] = buf;
            break;
        }
        case Duty::Summarize:
            out["summary"] = head_truncate(p["text"].get<std::string>(), p["max_chars"].get<std::size_t>());
            break;
    }
    return out.dump();
}

// --- remote ------------------------------------------------------------------

HttpBackend::HttpBackend(std::string endpoint, std::string model, std::string api_key)
    : model_(std::move(model)), api_key_(std::move(api_key)) {
    const std::string scheme = "http://";
    if (endpoint.rfind(scheme, 0) != 0) {
        throw ConfigError("gateway.endpoint: only http:// endpoints are supported, got '" + endpoint + "'");
    }
    auto slash = endpoint.find('/', scheme.size());
    base_ = endpoint.substr(0, slash);
    path_ = slash == std::string::npos ? "/" : endpoint.substr(slash);
}

std::string HttpBackend::complete(const GatewayRequest& req) {
    json body;
    body["model"] = model_;
    body["temperature"] = 0;
    body["messages"] = json::array(
        {{{"role", "system"},
          {"content", "You assist an attack-tree planner with the '" + std::string(to_string(req.duty)) +
                          "' duty. Answer with a single JSON object and nothing else."}},
         {{"role", "user"},
          {"content", req.context + "\n\nInput:\n" + req.payload.dump() + "\n\nAnswer schema:\n" +
                          response_schema(req.duty)}}});
    httplib::Client cli(base_);
    cli.set_connection_timeout(10);
    cli.set_read_timeout(120);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    auto res = cli.Post(path_, headers, body.dump(), "application/json");
    if (!res) throw GatewayError(GatewayError::Kind::Transport, "request to " + base_ + path_ + " failed");
    if (res->status != 200) {
        throw GatewayError(GatewayError::Kind::Transport, "endpoint answered HTTP " + std::to_string(res->status));
    }
    auto envelope = json::parse(res->body, nullptr, false);
    if (envelope.is_discarded() || !envelope.contains("choices") || !envelope["choices"].is_array() ||
        envelope["choices"].empty()) {
        return res->body;
    }
    const auto& msg = envelope["choices"][0]["message"];
    if (!msg.is_object() || !msg.contains("content") || !msg["content"].is_string()) return res->body;
    return msg["content"].get<std::string>();
}

std::shared_ptr<Backend> make_backend(const GatewayConfig& config, const SimEnvironment* env, std::uint64_t seed) {
    if (config.backend == "stub") {
        if (!env) throw ConfigError("gateway.backend: the stub needs an environment");
        return std::make_shared<StubBackend>(*env, seed, config.rank_correlation);
    }
    if (config.backend == "http") {
        const char* key = std::getenv(config.api_key_env.c_str());
        return std::make_shared<HttpBackend>(config.endpoint, config.model, key ? key : "");
    }
    throw ConfigError("gateway.backend: expected 'stub' or 'http'");
}

// --- gateway -----------------------------------------------------------------

namespace {

// Tolerates prose or code fences around the object.
json extract_object(const std::string& text) {
    auto open = text.find('{');
    auto close = text.rfind('}');
    if (open == std::string::npos || close == std::string::npos || close < open) return json(nullptr);
    auto j = json::parse(text.substr(open, close - open + 1), nullptr, false);
    if (j.is_discarded() || !j.is_object()) return json(nullptr);
    return j;
}

bool non_negative_integer(const json& v) {
    if (v.is_number_unsigned()) return true;
    if (v.is_number_integer()) return v.get<std::int64_t>() >= 0;
    return false;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

}  // namespace

Gateway::Gateway(std::shared_ptr<Backend> backend, std::uint64_t retries, std::uint64_t token_budget)
    : backend_(std::move(backend)), retries_(retries), token_budget_(token_budget) {
    if (!backend_) throw ConfigError("gateway: no backend");
}

json Gateway::ask(const GatewayRequest& request, const std::function<bool(const json&)>& valid) {
    ++stats_.calls;
    stats_.last_retries = 0;
    const std::uint64_t prompt_tokens = estimate_tokens(request.context) + estimate_tokens(request.payload.dump());
    for (std::uint64_t attempt = 0; attempt <= retries_; ++attempt) {
        if (attempt > 0) {
            ++stats_.retries;
            ++stats_.last_retries;
        }
        std::string text = backend_->complete(request);
        stats_.tokens += prompt_tokens + estimate_tokens(text);
        if (token_budget_ > 0 && stats_.tokens > token_budget_) {
            throw GatewayError(GatewayError::Kind::Budget, "token budget of " + std::to_string(token_budget_) +
                                                               " exhausted");
        }
        json j = extract_object(text);
        if (!j.is_null() && valid(j)) return j;
    }
    throw GatewayError(GatewayError::Kind::Schema, std::string(to_string(request.duty)) + ": no valid answer after " +
                                                       std::to_string(retries_ + 1) + " attempts");
}

std::map<NodeId, double> Gateway::horizon(const std::vector<BranchInfo>& branches, const std::string& context) {
    GatewayRequest req{Duty::HorizonEstimate, context, json::object()};
    req.payload["branches"] = json::array();
    for (const auto& b : branches) {
        json e;
        e["id"] = b.node.value;
        e["kind"] = std::string(to_string(b.kind));
        e["host"] = b.target.host;
        e["port"] = b.target.port ? json(*b.target.port) : json(nullptr);
        e["binding"] = b.binding;
        e["root"] = b.root;
        req.payload["branches"].push_back(std::move(e));
    }
    auto j = ask(req, [&](const json& a) {
        if (!a.contains("estimates") || !a["estimates"].is_object()) return false;
        return std::all_of(branches.begin(), branches.end(), [&](const BranchInfo& b) {
            auto key = std::to_string(b.node.value);
            return a["estimates"].contains(key) && non_negative_integer(a["estimates"][key]);
        });
    });
    std::map<NodeId, double> out;
    for (const auto& b : branches) {
        out[b.node] = static_cast<double>(j["estimates"][std::to_string(b.node.value)].get<std::int64_t>());
    }
    return out;
}

double Gateway::promise_init(Evidence evidence) {
    GatewayRequest req{Duty::PromiseInit, "", json::object()};
    req.payload["evidence"] = score(evidence);
    auto j = ask(req, [](const json& a) {
        return a.contains("promise") && a["promise"].is_number() && a["promise"].get<double>() >= 0.0 &&
               a["promise"].get<double>() <= 1.0;
    });
    return j["promise"].get<double>();
}

std::vector<HypothesisProposal> Gateway::expand(const std::string& host, const std::vector<ServiceInfo>& services,
                                                const std::string& context) {
    GatewayRequest req{Duty::ReconExpand, context, json::object()};
    req.payload["host"] = host;
    req.payload["services"] = json::array();
    for (const auto& s : services) {
        req.payload["services"].push_back({{"port", s.port}, {"name", s.name}, {"version", s.version}});
    }
    auto known_port = [&](int port) {
        return std::any_of(services.begin(), services.end(), [&](const ServiceInfo& s) { return s.port == port; });
    };
    auto j = ask(req, [&](const json& a) {
        if (!a.contains("proposals") || !a["proposals"].is_array()) return false;
        for (const auto& p : a["proposals"]) {
            if (!p.is_object() || !p.contains("port") || !p["port"].is_number_integer()) return false;
            if (!known_port(p["port"].get<int>())) return false;
            if (!p.contains("vulnerability") || !p["vulnerability"].is_string() ||
                p["vulnerability"].get<std::string>().empty()) {
                return false;
            }
            if (!p.contains("tool") || !p["tool"].is_string()) return false;
            if (p.contains("preconditions")) {
                if (!p["preconditions"].is_array()) return false;
                for (const auto& q : p["preconditions"]) {
                    if (!q.is_string()) return false;
                    try {
                        FactPattern::parse(q.get<std::string>());
                    } catch (const Error&) {
                        return false;
                    }
                }
            }
        }
        return true;
    });
    std::vector<HypothesisProposal> out;
    for (const auto& p : j["proposals"]) {
        HypothesisProposal h;
        h.port = p["port"].get<int>();
        h.vulnerability = p["vulnerability"].get<std::string>();
        h.tool = p["tool"].get<std::string>();
        if (p.contains("preconditions")) {
            for (const auto& q : p["preconditions"]) h.preconditions.push_back(FactPattern::parse(q.get<std::string>()));
        }
        out.push_back(std::move(h));
    }
    return out;
}

DecideAnswer Gateway::decide(const TdiVector& dims, const std::string& context) {
    GatewayRequest req{Duty::Decide, context, json::object()};
    req.payload["tdi"] = dims.tdi;
    req.payload["horizon"] = dims.horizon_norm;
    req.payload["evidence"] = dims.evidence_conf;
    req.payload["context"] = dims.context_load;
    req.payload["success"] = dims.success_rate;
    auto j = ask(req, [](const json& a) {
        if (!a.contains("choice") || !a["choice"].is_string()) return false;
        auto c = lower(a["choice"].get<std::string>());
        return (c == "recon" || c == "exploit") && a.contains("justification") && a["justification"].is_string();
    });
    DecideAnswer d;
    d.choice = lower(j["choice"].get<std::string>()) == "exploit" ? Mode::Exploit : Mode::Recon;
    d.justification = j["justification"].get<std::string>();
    return d;
}

std::string Gateway::summarize(std::string_view text, std::size_t max_chars) {
    GatewayRequest req{Duty::Summarize, "", json::object()};
    req.payload["text"] = std::string(text);
    req.payload["max_chars"] = max_chars;
    auto j = ask(req, [](const json& a) { return a.contains("summary") && a["summary"].is_string(); });
    return j["summary"].get<std::string>();
}

Summarizer Gateway::summarizer() {
    return [this](std::string_view text, std::size_t max_chars) { return summarize(text, max_chars); };
}

}  // namespace egats
