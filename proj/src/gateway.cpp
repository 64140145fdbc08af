#include "curricula/gateway.hpp"

#include <algorithm>
#include <thread>
#include <utility>

#include "curricula/errors.hpp"

namespace curricula {

namespace {

constexpr const char* kPurposeNames[] = {
    "taxonomy", "subjects", "format_conversion", "syllabus",
    "class_details", "question", "answer", "judge",
};

}  // namespace

const char* purpose_name(Purpose p) {
    auto idx = static_cast<size_t>(p);
    if (idx >= std::size(kPurposeNames)) throw UnknownPurpose("purpose enum out of range");
    return kPurposeNames[idx];
}

std::optional<Purpose> purpose_from_name(std::string_view name) {
    for (size_t i = 0; i < std::size(kPurposeNames); ++i) {
        if (name == kPurposeNames[i]) return static_cast<Purpose>(i);
    }
    return std::nullopt;
}

Gateway::Gateway(std::shared_ptr<CompletionBackend> backend, GatewayLimits limits)
    : backend_(std::move(backend)), limits_(limits) {
    if (!backend_) throw ConfigError("gateway requires a backend");
    if (limits_.requests_per_interval < 1) throw ConfigError("requests_per_interval must be >= 1");
    if (limits_.interval_ms < 1) throw ConfigError("interval_ms must be >= 1");
    if (limits_.max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
    if (limits_.max_retries < 0) throw ConfigError("max_retries must be >= 0");
}

void Gateway::admit() {
    using clock = std::chrono::steady_clock;
    const auto window = std::chrono::milliseconds(limits_.interval_ms + limits_.safety_margin_ms);
    std::unique_lock lock(mu_);
    for (;;) {
        const auto now = clock::now();
        while (!sends_.empty() && sends_.front() <= now - window) sends_.pop_front();
        if (in_flight_ < limits_.max_in_flight &&
            static_cast<int>(sends_.size()) < limits_.requests_per_interval) {
            sends_.push_back(now);
            ++in_flight_;
            return;
        }
        if (static_cast<int>(sends_.size()) >= limits_.requests_per_interval) {
            // The oldest send in the window fixes the earliest next slot.
            cv_.wait_until(lock, sends_.front() + window);
        } else {
            cv_.wait(lock);
        }
    }
}

void Gateway::release() {
    {
        std::lock_guard lock(mu_);
        --in_flight_;
    }
    cv_.notify_all();
}

CompletionResult Gateway::complete(const CompletionRequest& req) {
    if (req.messages.empty()) throw GatewayError(GatewayError::Kind::BadRequest, "empty message list");
    std::string last_error;
    const int max_attempts = limits_.max_retries + 1;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        admit();
        try {
            CompletionResult result = backend_->complete(req);
            release();
            result.attempt = attempt;
            return result;
        } catch (const GatewayError& e) {
            release();
            if (e.kind() != GatewayError::Kind::Transient) throw;
            last_error = e.what();
        } catch (...) {
            release();
            throw;
        }
        if (attempt < max_attempts) {
            double delay = limits_.backoff_base_ms;
            for (int i = 1; i < attempt; ++i) delay *= limits_.backoff_factor;
            delay = std::min(delay, static_cast<double>(limits_.backoff_max_ms));
            std::this_thread::sleep_for(std::chrono::milliseconds(static_cast<long>(delay)));
        }
    }
    throw GatewayError(GatewayError::Kind::Exhausted,
                       "retries exhausted for request '" + req.request_id + "': " + last_error);
}

}  // namespace curricula
