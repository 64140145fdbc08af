#include "curricula/subjects.hpp"

#include <set>

#include <nlohmann/json.hpp>

#include "curricula/errors.hpp"
#include "curricula/fenced.hpp"
#include "curricula/prompts.hpp"
#include "curricula/text.hpp"

namespace curricula {

namespace {

std::string coerce_to_string(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
}

std::vector<std::string> coerce_subtopics(const nlohmann::json& v) {
    std::vector<std::string> out;
    if (v.is_array()) {
        for (const auto& item : v) {
            std::string s = trim(coerce_to_string(item));
            if (!s.empty()) out.push_back(std::move(s));
        }
    } else if (!v.is_null()) {
        std::string s = trim(coerce_to_string(v));
        if (!s.empty()) out.push_back(std::move(s));
    }
    return out;
}

}  // namespace

std::vector<Subject> parse_subject_records(const std::vector<nlohmann::json>& records,
                                           const DisciplineRef& d, int source_query,
                                           SubjectGenStats* stats) {
    SubjectGenStats local;
    SubjectGenStats& st = stats ? *stats : local;
    std::vector<Subject> out;
    for (const auto& record : records) {
        std::string name;
        if (record.contains("subject_name")) name = trim(coerce_to_string(record["subject_name"]));
        if (name.empty()) {
            ++st.dropped_records;
            continue;
        }
        Subject s;
        s.name = std::move(name);
        s.level = record.contains("level") ? trim(coerce_to_string(record["level"])) : "";
        if (s.level.empty()) s.level = "unspecified";
        if (record.contains("subtopics")) s.subtopics = coerce_subtopics(record["subtopics"]);
        s.discipline_id = d.id;
        s.source_query = source_query;
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<Subject> generate_subjects(Gateway& gateway, const DisciplineRef& d, int n_queries,
                                       const StageParams& expert, const StageParams& conversion,
                                       SubjectGenStats* stats) {
    if (n_queries < 1) throw ConfigError("n_queries must be >= 1");
    SubjectGenStats local;
    SubjectGenStats& st = stats ? *stats : local;
    std::vector<Subject> merged;
    std::set<std::string> seen_names;
    for (int q = 0; q < n_queries; ++q) {
        const std::string prefix = "subjects/" + d.id + "/q" + std::to_string(q);

        CompletionRequest expert_req;
        expert_req.purpose = Purpose::subjects;
        expert_req.model = expert.model;
        expert_req.messages = {{"user", prompts::subjects_prompt(d.name, q, n_queries)}};
        expert_req.sampling = expert.sampling;
        expert_req.request_id = prefix + "/draft";
        const CompletionResult free_text = gateway.complete(expert_req);

        CompletionRequest convert_req;
        convert_req.purpose = Purpose::format_conversion;
        convert_req.model = conversion.model;
        convert_req.messages = expert_req.messages;
        convert_req.messages.push_back({"assistant", free_text.text});
        convert_req.messages.push_back({"user", prompts::subjects_conversion_prompt()});
        convert_req.sampling = conversion.sampling;
        convert_req.request_id = prefix + "/convert";
        const CompletionResult structured = gateway.complete(convert_req);

        std::vector<Subject> parsed;
        try {
            const ExtractionResult extracted = extract_fenced_records(structured.text);
            st.malformed_lines += extracted.malformed_lines;
            parsed = parse_subject_records(extracted.records, d, q, &st);
        } catch (const NoFencedBlock&) {
            // fall through: counted as an empty query below
        }
        if (parsed.empty()) ++st.empty_queries;
        for (auto& s : parsed) {
            if (seen_names.insert(normalize_name(s.name)).second) {
                merged.push_back(std::move(s));
            } else {
                ++st.duplicates_merged;
            }
        }
    }
    if (merged.empty()) {
        throw EmptyResult("no parseable subjects for discipline '" + d.id + "' after " +
                          std::to_string(n_queries) + " queries");
    }
    return merged;
}

nlohmann::json subject_to_json(const Subject& s) {
    return {{"discipline_id", s.discipline_id},
            {"name", s.name},
            {"level", s.level},
            {"subtopics", s.subtopics},
            {"source_query", s.source_query}};
}

Subject subject_from_json(const nlohmann::json& j) {
    Subject s;
    s.discipline_id = j.at("discipline_id").get<std::string>();
    s.name = j.at("name").get<std::string>();
    s.level = j.at("level").get<std::string>();
    s.subtopics = j.at("subtopics").get<std::vector<std::string>>();
    s.source_query = j.at("source_query").get<int>();
    return s;
}

}  // namespace curricula
