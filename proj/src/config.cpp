#include "egats/config.hpp"

#include "egats/errors.hpp"

#include <yaml-cpp/yaml.h>

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace egats {

namespace {

void require(bool ok, const char* field, const std::string& why) {
    if (!ok) throw ConfigError(std::string(field) + ": " + why);
}

bool unit(double v) { return v >= 0.0 && v <= 1.0; }

}  // namespace

void PlannerConfig::validate() const {
    require(unit(w_h), "w_h", "must be in [0,1]");
    require(unit(w_e), "w_e", "must be in [0,1]");
    require(unit(w_c), "w_c", "must be in [0,1]");
    require(unit(w_s), "w_s", "must be in [0,1]");
    require(std::abs(w_h + w_e + w_c + w_s - 1.0) <= 1e-12, "w_h+w_e+w_c+w_s", "weights must sum to 1");
    require(theta_exploit >= 0.0 && theta_exploit < theta_explore && theta_explore <= 1.0, "theta_exploit",
            "need 0 <= theta_exploit < theta_explore <= 1");
    require(theta_prune <= 1.0 && (!prune_enabled || theta_prune > theta_explore), "theta_prune",
            "must lie in (theta_explore, 1]");
    require(alpha >= 0.0 && alpha <= 1.0, "alpha", "must be in [0,1]");
    require(c_explore >= 0.0, "c_explore", "must be non-negative");
    require(lambda_difficulty >= 0.0, "lambda_difficulty", "must be non-negative");
    require(ideal_window > 0.0 && ideal_window < hard_window && hard_window <= 1.0, "ideal_window",
            "need 0 < ideal_window < hard_window <= 1");
    require(context_window > 0, "context_window", "must be positive");
    require(gateway.backend == "stub" || gateway.backend == "http", "gateway.backend", "expected 'stub' or 'http'");
    require(gateway.rank_correlation > 0.0 && gateway.rank_correlation <= 1.0, "gateway.rank_correlation",
            "must be in (0,1]");
}

PlannerConfig PlannerConfig::depth_first_baseline() const {
    PlannerConfig c = *this;
    c.theta_explore = 1.0;
    c.lambda_difficulty = 0.0;
    c.prune_enabled = false;
    c.selection = SelectionPolicy::DepthFirst;
    return c;
}

std::string_view to_string(SelectionPolicy p) {
    return p == SelectionPolicy::Ucb ? "ucb" : "depth_first";
}

PlannerConfig parse_config(std::string_view text) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(text));
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    PlannerConfig c;
    if (root.IsNull()) return c;
    if (!root.IsMap()) throw ConfigError("config: top level must be a mapping");

    static const std::set<std::string> known = {
        "w_h", "w_e", "w_c", "w_s", "theta_explore", "theta_exploit", "theta_prune", "k_min", "alpha",
        "c_explore", "lambda_difficulty", "ideal_window", "hard_window", "seed", "context_window",
        "prune_enabled", "selection", "gateway"};
    for (const auto& kv : root) {
        auto key = kv.first.as<std::string>();
        if (!known.count(key)) throw ConfigError("config: unknown key '" + key + "'");
    }

    auto read = [&](const char* key, auto& field) {
        if (!root[key]) return;
        try {
            field = root[key].as<std::decay_t<decltype(field)>>();
        } catch (const YAML::Exception&) {
            throw ConfigError(std::string(key) + ": wrong type");
        }
    };
    read("w_h", c.w_h);
    read("w_e", c.w_e);
    read("w_c", c.w_c);
    read("w_s", c.w_s);
    read("theta_explore", c.theta_explore);
    read("theta_exploit", c.theta_exploit);
    read("theta_prune", c.theta_prune);
    read("k_min", c.k_min);
    read("alpha", c.alpha);
    read("c_explore", c.c_explore);
    read("lambda_difficulty", c.lambda_difficulty);
    read("ideal_window", c.ideal_window);
    read("hard_window", c.hard_window);
    read("seed", c.seed);
    read("context_window", c.context_window);
    read("prune_enabled", c.prune_enabled);
    if (root["selection"]) {
        auto s = root["selection"].as<std::string>();
        if (s == "ucb") {
            c.selection = SelectionPolicy::Ucb;
        } else if (s == "depth_first") {
            c.selection = SelectionPolicy::DepthFirst;
        } else {
            throw ConfigError("selection: expected 'ucb' or 'depth_first'");
        }
    }
    if (auto g = root["gateway"]) {
        if (!g.IsMap()) throw ConfigError("gateway: must be a mapping");
        static const std::set<std::string> gateway_keys = {"backend", "endpoint", "model", "retries",
                                                           "token_budget", "api_key_env", "rank_correlation"};
        for (const auto& kv : g) {
            auto key = kv.first.as<std::string>();
            if (!gateway_keys.count(key)) throw ConfigError("config: unknown key 'gateway." + key + "'");
        }
        auto read_g = [&](const char* key, auto& field) {
            if (!g[key]) return;
            try {
                field = g[key].as<std::decay_t<decltype(field)>>();
            } catch (const YAML::Exception&) {
                throw ConfigError(std::string("gateway.") + key + ": wrong type");
            }
        };
        read_g("backend", c.gateway.backend);
        read_g("endpoint", c.gateway.endpoint);
        read_g("model", c.gateway.model);
        read_g("retries", c.gateway.retries);
        read_g("token_budget", c.gateway.token_budget);
        read_g("api_key_env", c.gateway.api_key_env);
        read_g("rank_correlation", c.gateway.rank_correlation);
    }
    c.validate();
    return c;
}

PlannerConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string canonical_json(const PlannerConfig& c) {
    nlohmann::ordered_json j;
    j["w_h"] = c.w_h;
    j["w_e"] = c.w_e;
    j["w_c"] = c.w_c;
    j["w_s"] = c.w_s;
    j["theta_explore"] = c.theta_explore;
    j["theta_exploit"] = c.theta_exploit;
    j["theta_prune"] = c.theta_prune;
    j["k_min"] = c.k_min;
    j["alpha"] = c.alpha;
    j["c_explore"] = c.c_explore;
    j["lambda_difficulty"] = c.lambda_difficulty;
    j["ideal_window"] = c.ideal_window;
    j["hard_window"] = c.hard_window;
    j["seed"] = c.seed;
    j["context_window"] = c.context_window;
    j["prune_enabled"] = c.prune_enabled;
    j["selection"] = std::string(to_string(c.selection));
    j["gateway"] = {{"backend", c.gateway.backend},
                    {"endpoint", c.gateway.endpoint},
                    {"model", c.gateway.model},
                    {"retries", c.gateway.retries},
                    {"token_budget", c.gateway.token_budget},
                    {"api_key_env", c.gateway.api_key_env},
                    {"rank_correlation", c.gateway.rank_correlation}};
    return j.dump();
}

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string config_hash(const PlannerConfig& config) { return fnv1a_hex(canonical_json(config)); }

}  // namespace egats
