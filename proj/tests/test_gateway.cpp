#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "curricula/errors.hpp"
#include "curricula/gateway.hpp"
#include "curricula/http_backend.hpp"

#include "test_support.hpp"

using namespace curricula;
using testsupport::ScriptedBackend;

namespace {

CompletionRequest simple_request(const std::string& id = "req-1") {
    CompletionRequest req;
    req.purpose = Purpose::question;
    req.model = "test-model";
    req.messages = {{"user", "hello"}};
    req.request_id = id;
    return req;
}

/// Records a steady-clock timestamp for every backend call.
class TimestampBackend : public CompletionBackend {
public:
    CompletionResult complete(const CompletionRequest&) override {
        {
            std::lock_guard lock(mu_);
            times.push_back(std::chrono::steady_clock::now());
        }
        return CompletionResult{"ok", "m", {}, 0, 1};
    }

    std::vector<std::chrono::steady_clock::time_point> times;

private:
    std::mutex mu_;
};

/// Tracks the peak number of concurrent complete() calls.
class ConcurrencyBackend : public CompletionBackend {
public:
    CompletionResult complete(const CompletionRequest&) override {
        const int now = ++current_;
        int seen = peak_.load();
        while (now > seen && !peak_.compare_exchange_weak(seen, now)) {
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(25));
        --current_;
        return CompletionResult{"ok", "m", {}, 0, 1};
    }

    int peak() const { return peak_.load(); }

private:
    std::atomic<int> current_{0};
    std::atomic<int> peak_{0};
};

/// Largest number of timestamps falling inside any window of `window_ms`.
int max_in_window(std::vector<std::chrono::steady_clock::time_point> times, int window_ms) {
    std::sort(times.begin(), times.end());
    const auto window = std::chrono::milliseconds(window_ms);
    int best = 0;
    size_t lo = 0;
    for (size_t hi = 0; hi < times.size(); ++hi) {
        while (times[hi] - times[lo] >= window) ++lo;
        best = std::max<int>(best, static_cast<int>(hi - lo + 1));
    }
    return best;
}

GatewayLimits fast_limits() {
    GatewayLimits limits;
    limits.requests_per_interval = 1000;
    limits.interval_ms = 1000;
    limits.max_retries = 3;
    limits.backoff_base_ms = 1;
    limits.backoff_max_ms = 5;
    return limits;
}

}  // namespace

TEST_SUITE_BEGIN("gateway");

TEST_CASE("purpose names round trip") {
    const Purpose all[] = {Purpose::taxonomy,      Purpose::subjects, Purpose::format_conversion,
                           Purpose::syllabus,      Purpose::class_details,
                           Purpose::question,      Purpose::answer,   Purpose::judge};
    for (Purpose p : all) {
        auto back = purpose_from_name(purpose_name(p));
        REQUIRE(back.has_value());
        CHECK(*back == p);
    }
    CHECK(purpose_name(Purpose::format_conversion) == std::string("format_conversion"));
    CHECK(!purpose_from_name("poetry").has_value());
}

TEST_CASE("constructor validates limits") {
    auto backend = std::make_shared<ScriptedBackend>(std::vector<ScriptedBackend::Step>{});
    CHECK_THROWS_AS(Gateway(nullptr, GatewayLimits{}), ConfigError);
    GatewayLimits bad;
    bad.requests_per_interval = 0;
    CHECK_THROWS_AS(Gateway(backend, bad), ConfigError);
    bad = GatewayLimits{};
    bad.interval_ms = 0;
    CHECK_THROWS_AS(Gateway(backend, bad), ConfigError);
    bad = GatewayLimits{};
    bad.max_in_flight = 0;
    CHECK_THROWS_AS(Gateway(backend, bad), ConfigError);
    bad = GatewayLimits{};
    bad.max_retries = -1;
    CHECK_THROWS_AS(Gateway(backend, bad), ConfigError);
}

TEST_CASE("an empty message list is rejected before reaching the backend") {
    auto backend = std::make_shared<ScriptedBackend>(std::vector<ScriptedBackend::Step>{});
    Gateway gateway(backend, fast_limits());
    CompletionRequest req = simple_request();
    req.messages.clear();
    CHECK_THROWS_AS(gateway.complete(req), GatewayError);
    CHECK(backend->requests.empty());
}

TEST_CASE("success passes through with attempt stamped") {
    auto backend = std::make_shared<ScriptedBackend>(
        std::vector<ScriptedBackend::Step>{ScriptedBackend::text("the answer")});
    Gateway gateway(backend, fast_limits());
    const auto result = gateway.complete(simple_request());
    CHECK(result.text == "the answer");
    CHECK(result.attempt == 1);
    REQUIRE(backend->requests.size() == 1);
    CHECK(backend->requests[0].request_id == "req-1");
}

TEST_CASE("transient failures are retried and the attempt count reflects it") {
    auto backend = std::make_shared<ScriptedBackend>(std::vector<ScriptedBackend::Step>{
        ScriptedBackend::transient("throttled"),
        ScriptedBackend::transient("throttled"),
        ScriptedBackend::text("eventually"),
    });
    Gateway gateway(backend, fast_limits());
    const auto result = gateway.complete(simple_request());
    CHECK(result.text == "eventually");
    CHECK(result.attempt == 3);
    CHECK(backend->requests.size() == 3);
}

TEST_CASE("retries stop after max_retries and surface Exhausted") {
    auto backend = std::make_shared<ScriptedBackend>(std::vector<ScriptedBackend::Step>{
        ScriptedBackend::transient("nope"),
        ScriptedBackend::transient("nope"),
        ScriptedBackend::transient("nope"),
    });
    GatewayLimits limits = fast_limits();
    limits.max_retries = 2;  // three attempts total
    Gateway gateway(backend, limits);
    try {
        gateway.complete(simple_request("doomed"));
        FAIL("expected GatewayError");
    } catch (const GatewayError& e) {
        CHECK(e.kind() == GatewayError::Kind::Exhausted);
        CHECK(std::string(e.what()).find("doomed") != std::string::npos);
    }
    // Exactly max_retries + 1 backend calls; a fourth would have thrown
    // BadRequest ("script exhausted") instead of Exhausted.
    CHECK(backend->requests.size() == 3);
}

TEST_CASE("auth and bad-request failures are not retried") {
    SUBCASE("auth") {
        auto backend = std::make_shared<ScriptedBackend>(std::vector<ScriptedBackend::Step>{
            ScriptedBackend::auth_failure(), ScriptedBackend::text("unreached")});
        Gateway gateway(backend, fast_limits());
        try {
            gateway.complete(simple_request());
            FAIL("expected GatewayError");
        } catch (const GatewayError& e) {
            CHECK(e.kind() == GatewayError::Kind::Auth);
        }
        CHECK(backend->requests.size() == 1);
    }
    SUBCASE("bad request") {
        auto backend = std::make_shared<ScriptedBackend>(std::vector<ScriptedBackend::Step>{
            [](const CompletionRequest&) -> CompletionResult {
                throw GatewayError(GatewayError::Kind::BadRequest, "malformed");
            },
            ScriptedBackend::text("unreached")});
        Gateway gateway(backend, fast_limits());
        try {
            gateway.complete(simple_request());
            FAIL("expected GatewayError");
        } catch (const GatewayError& e) {
            CHECK(e.kind() == GatewayError::Kind::BadRequest);
        }
        CHECK(backend->requests.size() == 1);
    }
}

TEST_CASE("the sliding-window budget is never exceeded") {
    auto backend = std::make_shared<TimestampBackend>();
    GatewayLimits limits;
    limits.requests_per_interval = 3;
    limits.interval_ms = 120;
    limits.safety_margin_ms = 60;
    limits.max_in_flight = 8;
    Gateway gateway(backend, limits);

    std::vector<std::future<void>> tasks;
    for (int i = 0; i < 8; ++i) {
        tasks.push_back(std::async(std::launch::async, [&gateway, i] {
            gateway.complete(simple_request("burst-" + std::to_string(i)));
        }));
    }
    for (auto& t : tasks) t.get();

    REQUIRE(backend->times.size() == 8);
    // Audit the backend-observed call times against the nominal window; the
    // safety margin absorbs the admit-to-call skew.
    CHECK(max_in_window(backend->times, limits.interval_ms) <= limits.requests_per_interval);
    // 8 calls at 3 per window need at least two full waits.
    const auto span = *std::max_element(backend->times.begin(), backend->times.end()) -
                      *std::min_element(backend->times.begin(), backend->times.end());
    CHECK(span >= std::chrono::milliseconds(2 * limits.interval_ms));
}

TEST_CASE("in-flight concurrency stays within max_in_flight") {
    auto backend = std::make_shared<ConcurrencyBackend>();
    GatewayLimits limits = fast_limits();
    limits.max_in_flight = 2;
    Gateway gateway(backend, limits);

    std::vector<std::future<void>> tasks;
    for (int i = 0; i < 6; ++i) {
        tasks.push_back(std::async(std::launch::async, [&gateway, i] {
            gateway.complete(simple_request("flight-" + std::to_string(i)));
        }));
    }
    for (auto& t : tasks) t.get();
    CHECK(backend->peak() <= 2);
    CHECK(backend->peak() >= 1);
}

// ---------------------------------------------------------------------------
// HttpBackend against a local stub server.
// ---------------------------------------------------------------------------

namespace {

class StubServer {
public:
    StubServer() {
        server_.Post("/ok", [this](const httplib::Request& req, httplib::Response& res) {
            {
                std::lock_guard lock(mu_);
                last_body_ = req.body;
                last_request_id_ = req.get_header_value("X-Request-Id");
                last_auth_ = req.get_header_value("Authorization");
            }
            nlohmann::json payload = {
                {"model", "stub-model"},
                {"choices", {{{"message", {{"role", "assistant"}, {"content", "hi there"}}}}}},
                {"usage", {{"prompt_tokens", 11}, {"completion_tokens", 4}}},
            };
            res.set_content(payload.dump(), "application/json");
        });
        server_.Post("/auth", [](const httplib::Request&, httplib::Response& res) {
            res.status = 401;
        });
        server_.Post("/forbidden", [](const httplib::Request&, httplib::Response& res) {
            res.status = 403;
        });
        server_.Post("/throttle", [](const httplib::Request&, httplib::Response& res) {
            res.status = 429;
        });
        server_.Post("/boom", [](const httplib::Request&, httplib::Response& res) {
            res.status = 500;
        });
        server_.Post("/reject", [](const httplib::Request&, httplib::Response& res) {
            res.status = 422;
            res.set_content("unknown sampling knob", "text/plain");
        });
        server_.Post("/garbled", [](const httplib::Request&, httplib::Response& res) {
            res.set_content("this is not json", "text/plain");
        });
        server_.Post("/nochoices", [](const httplib::Request&, httplib::Response& res) {
            res.set_content("{\"model\":\"stub\"}", "application/json");
        });
        server_.Post("/flaky", [this](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.get_header_value("X-Request-Id");
            int n;
            {
                std::lock_guard lock(mu_);
                n = ++flaky_counts_[id];
            }
            if (n <= 2) {
                res.status = 500;
                return;
            }
            nlohmann::json payload = {
                {"choices", {{{"message", {{"content", "third time lucky"}}}}}}};
            res.set_content(payload.dump(), "application/json");
        });

        port_ = server_.bind_to_any_port("127.0.0.1");
        REQUIRE(port_ > 0);
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~StubServer() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }

    std::string last_body() {
        std::lock_guard lock(mu_);
        return last_body_;
    }
    std::string last_request_id() {
        std::lock_guard lock(mu_);
        return last_request_id_;
    }
    std::string last_auth() {
        std::lock_guard lock(mu_);
        return last_auth_;
    }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::mutex mu_;
    std::string last_body_;
    std::string last_request_id_;
    std::string last_auth_;
    std::map<std::string, int> flaky_counts_;
};

HttpBackendOptions stub_options(const StubServer& server, const std::string& path) {
    HttpBackendOptions options;
    options.base_url = server.base_url();
    options.path = path;
    options.api_key_env = "CURRICULA_TEST_KEY";
    options.timeout_ms = 5000;
    return options;
}

GatewayError::Kind kind_of(HttpBackend& backend, const CompletionRequest& req) {
    try {
        backend.complete(req);
    } catch (const GatewayError& e) {
        return e.kind();
    }
    FAIL("expected GatewayError");
    return GatewayError::Kind::Transient;
}

}  // namespace

TEST_CASE("http backend: wire format, headers, and response parsing") {
    StubServer server;
    ::setenv("CURRICULA_TEST_KEY", "sk-unit-test", 1);
    HttpBackend backend(stub_options(server, "/ok"));

    CompletionRequest req = simple_request("wire-42");
    req.model = "gpt-test";
    req.sampling = {0.7, 0.9, 128};
    req.messages = {{"system", "be brief"}, {"user", "hello"}};
    const auto result = backend.complete(req);

    CHECK(result.text == "hi there");
    CHECK(result.model == "stub-model");
    CHECK(result.usage.prompt_tokens == 11);
    CHECK(result.usage.completion_tokens == 4);

    const auto body = nlohmann::json::parse(server.last_body());
    CHECK(body["model"] == "gpt-test");
    CHECK(body["temperature"] == doctest::Approx(0.7));
    CHECK(body["top_p"] == doctest::Approx(0.9));
    CHECK(body["max_tokens"] == 128);
    REQUIRE(body["messages"].size() == 2);
    CHECK(body["messages"][0]["role"] == "system");
    CHECK(body["messages"][1]["content"] == "hello");
    CHECK(server.last_request_id() == "wire-42");
    CHECK(server.last_auth() == "Bearer sk-unit-test");

    ::unsetenv("CURRICULA_TEST_KEY");
    backend.complete(req);
    CHECK(server.last_auth().empty());
}

TEST_CASE("http backend: status codes map onto gateway error kinds") {
    StubServer server;
    const auto req = simple_request();
    {
        HttpBackend b(stub_options(server, "/auth"));
        CHECK(kind_of(b, req) == GatewayError::Kind::Auth);
    }
    {
        HttpBackend b(stub_options(server, "/forbidden"));
        CHECK(kind_of(b, req) == GatewayError::Kind::Auth);
    }
    {
        HttpBackend b(stub_options(server, "/throttle"));
        CHECK(kind_of(b, req) == GatewayError::Kind::Transient);
    }
    {
        HttpBackend b(stub_options(server, "/boom"));
        CHECK(kind_of(b, req) == GatewayError::Kind::Transient);
    }
    {
        HttpBackend b(stub_options(server, "/reject"));
        CHECK(kind_of(b, req) == GatewayError::Kind::BadRequest);
    }
    {
        HttpBackend b(stub_options(server, "/garbled"));
        CHECK(kind_of(b, req) == GatewayError::Kind::Transient);
    }
    {
        HttpBackend b(stub_options(server, "/nochoices"));
        CHECK(kind_of(b, req) == GatewayError::Kind::Transient);
    }
}

TEST_CASE("http backend: transport failure on a closed port is transient") {
    HttpBackendOptions options;
    options.base_url = "http://127.0.0.1:9";  // discard port; nothing listens
    options.timeout_ms = 300;
    HttpBackend backend(options);
    CHECK(kind_of(backend, simple_request()) == GatewayError::Kind::Transient);
}

TEST_CASE("http backend: option validation") {
    HttpBackendOptions options;
    options.base_url = "";
    CHECK_THROWS_AS(HttpBackend{options}, ConfigError);
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    options.base_url = "https://example.test";
    CHECK_THROWS_AS(HttpBackend{options}, ConfigError);
#endif
}

TEST_CASE("gateway over http: server-failure retries recover end to end") {
    StubServer server;
    auto backend = std::make_shared<HttpBackend>(stub_options(server, "/flaky"));
    GatewayLimits limits = fast_limits();
    Gateway gateway(backend, limits);
    const auto result = gateway.complete(simple_request("flaky-req"));
    CHECK(result.text == "third time lucky");
    CHECK(result.attempt == 3);
}

TEST_SUITE_END();
