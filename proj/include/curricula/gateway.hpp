#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace curricula {

/// Per-call sampling knobs. Invariants: temperature >= 0, 0 < top_p <= 1,
/// max_tokens >= 1.
struct SamplingParams {
    double temperature = 1.0;
    double top_p = 0.95;
    int max_tokens = 4096;

    bool operator==(const SamplingParams&) const = default;
};

/// Pipeline stage a completion request belongs to. The mock backend dispatches
/// on this tag to produce stage-appropriate, extractor-compatible text.
enum class Purpose {
    taxonomy,
    subjects,
    format_conversion,
    syllabus,
    class_details,
    question,
    answer,
    judge,
};

const char* purpose_name(Purpose p);
std::optional<Purpose> purpose_from_name(std::string_view name);

struct Message {
    std::string role;  // "system" | "user" | "assistant"
    std::string text;

    bool operator==(const Message&) const = default;
};

struct CompletionRequest {
    Purpose purpose = Purpose::question;
    std::string model;
    std::vector<Message> messages;
    SamplingParams sampling;
    std::string request_id;  // unique within a run
};

struct Usage {
    long prompt_tokens = 0;
    long completion_tokens = 0;
};

struct CompletionResult {
    std::string text;
    std::string model;
    Usage usage;
    long latency_ms = 0;
    int attempt = 1;  // set by the gateway; <= max_retries + 1
};

/// A completion provider. Implementations signal failure by throwing
/// GatewayError: Kind::Transient for retryable conditions (timeouts,
/// throttling, 5xx), Kind::Auth / Kind::BadRequest for terminal ones.
class CompletionBackend {
public:
    virtual ~CompletionBackend() = default;
    virtual CompletionResult complete(const CompletionRequest& req) = 0;
};

struct GatewayLimits {
    /// Admission budget: at most `requests_per_interval` sends within any
    /// sliding window of `interval_ms` (+ `safety_margin_ms`) milliseconds.
    int requests_per_interval = 60;
    int interval_ms = 60000;
    /// Extra spacing so externally observed timestamps (which include network
    /// jitter) still respect the nominal window.
    int safety_margin_ms = 0;
    int max_in_flight = 8;
    /// Retries on transient failures; total attempts = max_retries + 1.
    int max_retries = 3;
    int backoff_base_ms = 200;
    double backoff_factor = 2.0;
    int backoff_max_ms = 10000;
};

/// Thread-safe front door for all model calls: enforces the rate budget via a
/// sliding-window admission rule, bounds concurrent in-flight requests, and
/// retries transient failures with exponential backoff. Every attempt
/// (including retries) consumes one admission slot.
class Gateway {
public:
    Gateway(std::shared_ptr<CompletionBackend> backend, GatewayLimits limits);

    /// Blocks for admission, then calls the backend. Throws
    /// GatewayError{Exhausted} once transient failures exceed max_retries;
    /// rethrows Auth/BadRequest immediately without retry.
    CompletionResult complete(const CompletionRequest& req);

    const GatewayLimits& limits() const { return limits_; }

private:
    void admit();
    void release();

    std::shared_ptr<CompletionBackend> backend_;
    GatewayLimits limits_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<std::chrono::steady_clock::time_point> sends_;
    int in_flight_ = 0;
};

}  // namespace curricula
