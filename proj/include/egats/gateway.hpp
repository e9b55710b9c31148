#pragma once

#include "egats/config.hpp"
#include "egats/memory.hpp"
#include "egats/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace egats {

class SimEnvironment;

enum class Duty { HorizonEstimate, PromiseInit, ReconExpand, Decide, Summarize };

std::string_view to_string(Duty d);

struct GatewayRequest {
    Duty duty = Duty::Decide;
    std::string context;               // rendered assembled context
    nlohmann::ordered_json payload;    // duty inputs
};

// What a backend must answer for a duty, as a short JSON description.
std::string response_schema(Duty d);

class Backend {
public:
    virtual ~Backend() = default;
    // Raw answer text; the gateway parses and validates it.
    virtual std::string complete(const GatewayRequest& request) = 0;
};

// Deterministic answers derived from the environment's ground truth.
// Spearman rank correlation with average ranks for ties; 0 when either
// side is constant.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

class StubBackend : public Backend {
public:
    StubBackend(const SimEnvironment& env, std::uint64_t seed, double rank_correlation = 0.7);
    std::string complete(const GatewayRequest& request) override;

    // Gaussian noise scale that gives the requested Spearman correlation
    // for normally spread distances with the given standard deviation.
    static double noise_sigma(double truth_stddev, double rank_correlation);

    // Noise scale whose emitted (rounded, non-negative) estimates have mean
    // Spearman correlation `rank_correlation` with this exact truth vector.
    // Memoized on the sorted vector.
    static double calibrated_sigma(std::vector<double> truth, double rank_correlation);

private:
    double true_distance(const nlohmann::ordered_json& branch) const;

    const SimEnvironment& env_;
    std::uint64_t seed_;
    double rank_correlation_;
};

// Chat-completions style endpoint over plain HTTP; temperature is fixed at 0.
class HttpBackend : public Backend {
public:
    HttpBackend(std::string endpoint, std::string model, std::string api_key);
    std::string complete(const GatewayRequest& request) override;

private:
    std::string base_;
    std::string path_;
    std::string model_;
    std::string api_key_;
};

struct BranchInfo {
    NodeId node;
    NodeKind kind = NodeKind::Observation;
    Target target;
    std::string binding;
    bool root = false;
};

struct HypothesisProposal {
    int port = 0;
    std::string vulnerability;
    std::string tool;
    std::vector<FactPattern> preconditions;
};

struct DecideAnswer {
    Mode choice = Mode::Recon;   // Recon or Exploit
    std::string justification;
};

struct ServiceInfo {
    int port = 0;
    std::string name;
    std::string version;
};

struct GatewayStats {
    std::uint64_t calls = 0;
    std::uint64_t retries = 0;        // over all calls
    std::uint64_t last_retries = 0;   // for the latest call
    std::uint64_t tokens = 0;
};

// Typed front end: one method per duty. Malformed answers are retried up to
// `retries` times before a Schema error; exceeding the token budget raises
// a Budget error.
class Gateway {
public:
    Gateway(std::shared_ptr<Backend> backend, std::uint64_t retries = 2, std::uint64_t token_budget = 0);

    std::map<NodeId, double> horizon(const std::vector<BranchInfo>& branches, const std::string& context = "");
    double promise_init(Evidence evidence);
    std::vector<HypothesisProposal> expand(const std::string& host, const std::vector<ServiceInfo>& services,
                                           const std::string& context = "");
    DecideAnswer decide(const TdiVector& dims, const std::string& context = "");
    std::string summarize(std::string_view text, std::size_t max_chars);

    // Adapter for assemble_context.
    Summarizer summarizer();

    const GatewayStats& stats() const { return stats_; }

private:
    nlohmann::ordered_json ask(const GatewayRequest& request,
                               const std::function<bool(const nlohmann::ordered_json&)>& valid);

    std::shared_ptr<Backend> backend_;
    std::uint64_t retries_;
    std::uint64_t token_budget_;
    GatewayStats stats_;
};

// Backend chosen by config.gateway.backend; the stub needs `env`.
std::shared_ptr<Backend> make_backend(const GatewayConfig& config, const SimEnvironment* env, std::uint64_t seed);

}  // namespace egats
