#pragma once

#include <cstdint>

#include "curricula/gateway.hpp"

namespace curricula {

/// Offline completion provider. Output is a pure function of (purpose,
/// message texts, seed) — request id and model do not influence it — and is
/// always parseable by the extractor of the corresponding stage: taxonomy
/// completions are valid indented outlines, subjects/class_details emit
/// fenced JSON Lines with the expected keys, syllabi contain numbered
/// session blocks, judge output carries two integer scores, and so on.
class MockBackend : public CompletionBackend {
public:
    explicit MockBackend(uint64_t seed) : seed_(seed) {}

    CompletionResult complete(const CompletionRequest& req) override;

    uint64_t seed() const { return seed_; }

private:
    uint64_t seed_;
};

}  // namespace curricula
