#include "curricula/fenced.hpp"

#include <nlohmann/json.hpp>

#include "curricula/text.hpp"

namespace curricula {

namespace {

bool is_fence_line(const std::string& line) {
    return starts_with(trim(line), "```");
}

}  // namespace

ExtractionResult extract_fenced_records(std::string_view text) {
    const std::vector<std::string> lines = split_lines(text);

    bool saw_fence = false;
    bool in_block = false;
    ExtractionResult result;

    for (const std::string& line : lines) {
        if (is_fence_line(line)) {
            saw_fence = true;
            in_block = !in_block;
            continue;
        }
        if (!in_block) continue;

        const std::string body = trim(line);
        if (body.empty()) continue;

        nlohmann::json parsed = nlohmann::json::parse(body, nullptr, false);
        if (parsed.is_discarded() || !parsed.is_object()) {
            ++result.malformed_lines;
            continue;
        }
        result.records.push_back(std::move(parsed));
    }

    if (!saw_fence) {
        throw NoFencedBlock("no triple-backtick fenced block in completion");
    }
    return result;
}

}  // namespace curricula
