#include <doctest.h>

#include "egats/errors.hpp"
#include "egats/gateway.hpp"
#include "egats/sim.hpp"

#include <httplib.h>

#include <deque>
#include <numeric>
#include <thread>

using namespace egats;

namespace {

// Replays canned answers; repeats the last one when exhausted.
class CannedBackend : public Backend {
public:
    explicit CannedBackend(std::deque<std::string> answers) : answers_(std::move(answers)) {}
    std::string complete(const GatewayRequest&) override {
        ++calls;
        if (answers_.size() > 1) {
            auto a = answers_.front();
            answers_.pop_front();
            return a;
        }
        return answers_.front();
    }
    int calls = 0;

private:
    std::deque<std::string> answers_;
};

// Textbook formula for distinct values: 1 - 6 sum d^2 / (n (n^2 - 1)).
double spearman_distinct(const std::vector<double>& a, const std::vector<double>& b) {
    auto rank = [](const std::vector<double>& v) {
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](auto x, auto y) { return v[x] < v[y]; });
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < idx.size(); ++i) r[idx[i]] = static_cast<double>(i + 1);
        return r;
    };
    auto ra = rank(a), rb = rank(b);
    double d2 = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d2 += (ra[i] - rb[i]) * (ra[i] - rb[i]);
    const double n = static_cast<double>(a.size());
    return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

std::vector<BranchInfo> vuln_branches(const SimEnvironment& env) {
    std::vector<BranchInfo> out;
    std::uint64_t id = 1;
    for (const auto& v : env.all_vulnerabilities()) {
        BranchInfo b;
        b.node = NodeId{id++};
        b.kind = NodeKind::Hypothesis;
        b.target = {v.host, v.port};
        b.binding = v.vuln->id;
        out.push_back(b);
    }
    return out;
}

std::vector<double> capped_truth(const SimEnvironment& env, const std::vector<BranchInfo>& branches) {
    std::vector<double> t;
    double max_finite = -1;
    for (const auto& b : branches) {
        t.push_back(env.steps_to_exploit(b.binding));
        max_finite = std::max(max_finite, t.back());
    }
    for (auto& x : t) {
        if (x < 0) x = max_finite < 0 ? 20 : max_finite + 10;
    }
    return t;
}

}  // namespace

TEST_CASE("spearman matches the distinct-value formula") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0, 100);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> a(8), b(8);
        for (auto& x : a) x = u(rng);
        for (auto& x : b) x = u(rng);
        CHECK(spearman(a, b) == doctest::Approx(spearman_distinct(a, b)).epsilon(1e-12));
    }
    CHECK(spearman({1, 2, 3}, {3, 3, 3}) == 0.0);
    CHECK(spearman({1, 2, 2, 3}, {1, 2, 2, 3}) == doctest::Approx(1.0));
}

TEST_CASE("stub horizon is deterministic and exact without noise") {
    auto env = generate_env(5, {5, 3, 2});
    auto branches = vuln_branches(env);
    Gateway a(std::make_shared<StubBackend>(env, 9, 0.7));
    Gateway b(std::make_shared<StubBackend>(env, 9, 0.7));
    CHECK(a.horizon(branches) == b.horizon(branches));

    Gateway exact(std::make_shared<StubBackend>(env, 9, 1.0));
    auto est = exact.horizon(branches);
    auto truth = capped_truth(env, branches);
    for (std::size_t i = 0; i < branches.size(); ++i) CHECK(est.at(branches[i].node) == truth[i]);
    for (const auto& [id, h] : a.horizon(branches)) {
        CHECK(h >= 0.0);
        CHECK(h == std::floor(h));
    }
}

TEST_CASE("stub horizon rank correlation 0.7 over 50 branch sets") {
    double total = 0;
    int sets = 0;
    for (std::uint64_t s = 1; sets < 50; ++s) {
        auto env = generate_env(100 + s, {5, 1 + static_cast<int>(s % 3), static_cast<int>(s % 3)});
        auto branches = vuln_branches(env);
        auto truth = capped_truth(env, branches);
        if (*std::min_element(truth.begin(), truth.end()) == *std::max_element(truth.begin(), truth.end())) continue;
        Gateway g(std::make_shared<StubBackend>(env, s, 0.7));
        auto est = g.horizon(branches);
        std::vector<double> e;
        for (const auto& b : branches) e.push_back(est.at(b.node));
        total += spearman(truth, e);
        ++sets;
    }
    const double rho = total / sets;
    MESSAGE("mean Spearman rho over 50 sets: " << rho);
    CHECK(rho >= 0.6);
    CHECK(rho <= 0.8);
}

TEST_CASE("decide follows the evidence rule") {
    auto env = generate_env(5, {5, 3, 2});
    Gateway g(std::make_shared<StubBackend>(env, 1));
    TdiVector d;
    d.tdi = 0.45;
    d.evidence_conf = 0.5;
    auto yes = g.decide(d);
    CHECK(yes.choice == Mode::Exploit);
    CHECK_FALSE(yes.justification.empty());
    d.evidence_conf = 0.475;
    CHECK(g.decide(d).choice == Mode::Recon);
}

TEST_CASE("malformed replies are retried") {
    auto backend = std::make_shared<CannedBackend>(std::deque<std::string>{
        "not json", R"({"choice": "maybe"})", R"(Sure: {"choice": "exploit", "justification": "ok"})"});
    Gateway g(backend, 2);
    auto a = g.decide({});
    CHECK(a.choice == Mode::Exploit);
    CHECK(g.stats().last_retries == 2);
    CHECK(backend->calls == 3);

    auto broken = std::make_shared<CannedBackend>(std::deque<std::string>{"{}"});
    Gateway h(broken, 2);
    try {
        h.decide({});
        FAIL("expected schema error");
    } catch (const GatewayError& e) {
        CHECK(e.kind() == GatewayError::Kind::Schema);
    }
    CHECK(broken->calls == 3);

    auto neg = std::make_shared<CannedBackend>(std::deque<std::string>{R"({"estimates": {"1": -2}})"});
    Gateway n(neg, 0);
    CHECK_THROWS_AS(n.horizon({BranchInfo{NodeId{1}}}), GatewayError);
}

TEST_CASE("token budget stops the gateway") {
    auto backend = std::make_shared<CannedBackend>(std::deque<std::string>{R"({"summary": "x"})"});
    Gateway g(backend, 0, 10);
    try {
        g.summarize(std::string(200, 'a'), 10);
        FAIL("expected budget error");
    } catch (const GatewayError& e) {
        CHECK(e.kind() == GatewayError::Kind::Budget);
    }
}

TEST_CASE("http backend speaks chat completions") {
    httplib::Server server;
    std::string seen_auth;
    nlohmann::json seen_body;
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        seen_auth = req.get_header_value("Authorization");
        seen_body = nlohmann::json::parse(req.body);
        nlohmann::json reply;
        reply["choices"] = {{{"message", {{"role", "assistant"}, {"content", R"({"promise": 0.42})"}}}}};
        res.set_content(reply.dump(), "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    auto backend = std::make_shared<HttpBackend>("http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions",
                                                 "test-model", "secret");
    Gateway g(backend);
    CHECK(g.promise_init(Evidence::Plausible) == doctest::Approx(0.42));
    CHECK(seen_auth == "Bearer secret");
    CHECK(seen_body["model"] == "test-model");
    CHECK(seen_body["temperature"] == 0);
    server.stop();
    t.join();

    CHECK_THROWS_AS(HttpBackend("https://example.invalid/v1", "m", ""), ConfigError);
    HttpBackend dead("http://127.0.0.1:1/v1/chat/completions", "m", "");
    try {
        dead.complete({});
        FAIL("expected transport error");
    } catch (const GatewayError& e) {
        CHECK(e.kind() == GatewayError::Kind::Transport);
    }
}
