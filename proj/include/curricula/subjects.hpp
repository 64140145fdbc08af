#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "curricula/gateway.hpp"
#include "curricula/taxonomy.hpp"

namespace curricula {

/// A course-like unit within a discipline. name is non-empty; subtopics may
/// be empty but never contain empty strings.
struct Subject {
    std::string name;
    std::string level;
    std::vector<std::string> subtopics;
    std::string discipline_id;
    int source_query = 0;

    bool operator==(const Subject&) const = default;
};

/// Model and sampling parameters for one pipeline stage.
struct StageParams {
    std::string model;
    SamplingParams sampling;
};

struct SubjectGenStats {
    int malformed_lines = 0;   // unparseable JSON lines inside fences
    int dropped_records = 0;   // records without a subject_name
    int empty_queries = 0;     // queries that yielded zero parseable subjects
    int duplicates_merged = 0; // within-discipline name collisions across queries
};

/// Lenient record mapping: subject_name -> name (records without one are
/// dropped and counted), level coerced to string (default "unspecified"),
/// subtopics coerced to a list of non-empty strings (a scalar becomes a
/// singleton; default empty). Never throws; output length <= input length.
std::vector<Subject> parse_subject_records(const std::vector<nlohmann::json>& records,
                                           const DisciplineRef& d, int source_query,
                                           SubjectGenStats* stats = nullptr);

/// Two-phase prompting per query: the free-text expert prompt, then a
/// format-conversion turn on its completion in the same conversation; fenced
/// JSON Lines from the second completion are parsed into Subjects. Results
/// are merged across queries with within-discipline dedup by normalized name
/// (first occurrence wins); duplicates across disciplines are preserved by
/// construction. EmptyResult if every query yields zero parseable subjects.
std::vector<Subject> generate_subjects(Gateway& gateway, const DisciplineRef& d, int n_queries,
                                       const StageParams& expert, const StageParams& conversion,
                                       SubjectGenStats* stats = nullptr);

nlohmann::json subject_to_json(const Subject& s);
Subject subject_from_json(const nlohmann::json& j);

}  // namespace curricula
