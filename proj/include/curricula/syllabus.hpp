#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "curricula/subjects.hpp"

namespace curricula {

/// One syllabus unit. Invariants after extraction validation: name non-empty,
/// key_concepts non-empty with no empty strings and no within-session
/// duplicates (by normalized string).
struct ClassSession {
    int index = 0;  // 1-based, contiguous
    std::string name;
    std::string description;
    std::vector<std::string> key_concepts;

    bool operator==(const ClassSession&) const = default;
};

struct SubjectRef {
    std::string discipline_id;
    std::string name;
    std::string level;

    bool operator==(const SubjectRef&) const = default;
};

struct Syllabus {
    std::string id;  // assigned by the caller; unique within a run
    SubjectRef subject_ref;
    std::string raw_text;       // retained for audit
    std::string introduction;   // free text before the first session heading
    std::vector<ClassSession> sessions;
};

struct SyllabusStats {
    int malformed_lines = 0;
    int dropped_sessions = 0;        // sessions with zero usable key concepts
    int deduped_concepts = 0;        // within-session duplicate concepts removed
    bool session_count_warning = false;  // count outside the expected 10..30 band
};

/// One gateway call that asks for an introduction plus numbered class
/// sessions with descriptions and key concepts; returns the unstructured
/// completion text.
std::string generate_syllabus_text(Gateway& gateway, const Subject& s, const DisciplineRef& d,
                                   const StageParams& params, const std::string& request_id);

/// Format-conversion turn over the raw syllabus (same fenced JSON Lines
/// mechanism as subject extraction, keys session_name / description /
/// key_concepts), followed by validation: sessions without key concepts are
/// dropped with a warning, concepts are deduped within each session, and
/// indices are reassigned contiguously. ExtractionFailed if nothing valid
/// remains.
std::vector<ClassSession> extract_class_details(Gateway& gateway, const Subject& s,
                                                const DisciplineRef& d, const std::string& raw,
                                                const StageParams& conversion,
                                                const std::string& request_id,
                                                SyllabusStats* stats = nullptr);

/// Validation/normalization step used by extract_class_details; exposed for
/// direct testing on hand-built records.
std::vector<ClassSession> validate_sessions(std::vector<ClassSession> sessions,
                                            SyllabusStats* stats = nullptr);

/// The free text preceding the first session-like heading.
std::string extract_introduction(const std::string& raw);

nlohmann::json syllabus_to_json(const Syllabus& sy);
Syllabus syllabus_from_json(const nlohmann::json& j);

}  // namespace curricula
