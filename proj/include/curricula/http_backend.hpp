#pragma once

#include <string>

#include "curricula/gateway.hpp"

namespace curricula {

struct HttpBackendOptions {
    std::string base_url = "http://127.0.0.1:8080";  // scheme://host[:port]
    std::string path = "/v1/chat/completions";
    /// Name of the environment variable holding the API key. The key itself is
    /// read at request time and never stored, logged, or echoed.
    std::string api_key_env = "OPENAI_API_KEY";
    int timeout_ms = 60000;
};

/// Chat-completions HTTP client. Serializes requests in the standard chat wire
/// format, maps HTTP failures onto GatewayError kinds (401/403 -> Auth, other
/// 4xx -> BadRequest except 408/429 -> Transient, 5xx and transport errors ->
/// Transient), and parses choices[0].message.content from the response.
class HttpBackend : public CompletionBackend {
public:
    explicit HttpBackend(HttpBackendOptions options);

    CompletionResult complete(const CompletionRequest& req) override;

private:
    HttpBackendOptions options_;
};

}  // namespace curricula
