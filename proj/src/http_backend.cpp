#include "curricula/http_backend.hpp"

#include <chrono>
#include <cstdlib>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "curricula/errors.hpp"

namespace curricula {

HttpBackend::HttpBackend(HttpBackendOptions options) : options_(std::move(options)) {
    if (options_.base_url.empty()) throw ConfigError("http backend requires a base_url");
    if (options_.base_url.rfind("https://", 0) == 0) {
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
        throw ConfigError("this build lacks TLS support; use an http:// endpoint or rebuild with OpenSSL");
#endif
    }
}

CompletionResult HttpBackend::complete(const CompletionRequest& req) {
    nlohmann::json body = {
        {"model", req.model},
        {"temperature", req.sampling.temperature},
        {"top_p", req.sampling.top_p},
        {"max_tokens", req.sampling.max_tokens},
    };
    auto& messages = body["messages"] = nlohmann::json::array();
    for (const auto& m : req.messages) {
        messages.push_back({{"role", m.role}, {"content", m.text}});
    }

    httplib::Client client(options_.base_url);
    client.set_connection_timeout(std::chrono::milliseconds(options_.timeout_ms));
    client.set_read_timeout(std::chrono::milliseconds(options_.timeout_ms));
    client.set_write_timeout(std::chrono::milliseconds(options_.timeout_ms));

    httplib::Headers headers = {{"X-Request-Id", req.request_id}};
    if (const char* key = std::getenv(options_.api_key_env.c_str()); key && *key) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    const auto start = std::chrono::steady_clock::now();
    httplib::Result res = client.Post(options_.path, headers, body.dump(), "application/json");
    const auto elapsed =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);

    if (!res) {
        throw GatewayError(GatewayError::Kind::Transient,
                           "transport failure: " + httplib::to_string(res.error()));
    }
    const int status = res->status;
    if (status == 401 || status == 403) {
        throw GatewayError(GatewayError::Kind::Auth, "credentials rejected (HTTP " + std::to_string(status) + ")");
    }
    if (status == 408 || status == 429 || status >= 500) {
        throw GatewayError(GatewayError::Kind::Transient, "HTTP " + std::to_string(status));
    }
    if (status != 200) {
        throw GatewayError(GatewayError::Kind::BadRequest,
                           "request rejected (HTTP " + std::to_string(status) + "): " + res->body);
    }

    nlohmann::json payload = nlohmann::json::parse(res->body, nullptr, false);
    if (payload.is_discarded() || !payload.contains("choices") || payload["choices"].empty() ||
        !payload["choices"][0].contains("message")) {
        throw GatewayError(GatewayError::Kind::Transient, "malformed completion payload");
    }

    CompletionResult result;
    result.text = payload["choices"][0]["message"].value("content", "");
    result.model = payload.value("model", req.model);
    if (payload.contains("usage")) {
        result.usage.prompt_tokens = payload["usage"].value("prompt_tokens", 0L);
        result.usage.completion_tokens = payload["usage"].value("completion_tokens", 0L);
    }
    result.latency_ms = elapsed.count();
    return result;
}

}  // namespace curricula
