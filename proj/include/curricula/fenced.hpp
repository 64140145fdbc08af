#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "curricula/errors.hpp"

namespace curricula {

/// Outcome of scanning fenced blocks for JSON-Lines records.
struct ExtractionResult {
    std::vector<nlohmann::json> records;  ///< one per well-formed object line, document order
    int malformed_lines = 0;              ///< non-blank lines inside fences that failed to parse
};

/// Extracts every triple-backtick fenced block from `text` and parses each
/// non-blank line inside as a standalone JSON object.
///
/// A fence delimiter is any line whose trimmed form starts with "```"; an
/// optional language tag after the backticks is ignored. An unterminated
/// final fence runs to end of input. Lines that are not valid JSON objects
/// are skipped and counted in malformed_lines.
///
/// Throws NoFencedBlock when the text contains no fence delimiter at all.
ExtractionResult extract_fenced_records(std::string_view text);

}  // namespace curricula
