#include "curricula/syllabus.hpp"

#include <cctype>
#include <set>

#include <nlohmann/json.hpp>

#include "curricula/errors.hpp"
#include "curricula/fenced.hpp"
#include "curricula/prompts.hpp"
#include "curricula/text.hpp"

namespace curricula {

namespace {

bool is_session_heading(const std::string& line) {
    const std::string t = trim(line);
    for (const char* prefix : {"Session ", "Class ", "Lecture ", "Week ", "Unit "}) {
        if (starts_with(t, prefix)) {
            const size_t off = std::string(prefix).size();
            if (off < t.size() && std::isdigit(static_cast<unsigned char>(t[off]))) return true;
        }
    }
    // Numbered headings like "1." or "3)" also start a session.
    size_t i = 0;
    while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) ++i;
    return i > 0 && i < t.size() && (t[i] == '.' || t[i] == ')');
}

std::string coerce_string(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_null()) return {};
    return v.dump();
}

}  // namespace

std::string generate_syllabus_text(Gateway& gateway, const Subject& s, const DisciplineRef& d,
                                   const StageParams& params, const std::string& request_id) {
    CompletionRequest req;
    req.purpose = Purpose::syllabus;
    req.model = params.model;
    req.messages = {{"user", prompts::syllabus_prompt(s.name, s.level, s.subtopics, d.name)}};
    req.sampling = params.sampling;
    req.request_id = request_id;
    return gateway.complete(req).text;
}

std::vector<ClassSession> validate_sessions(std::vector<ClassSession> sessions,
                                            SyllabusStats* stats) {
    SyllabusStats local;
    SyllabusStats& st = stats ? *stats : local;
    std::vector<ClassSession> out;
    for (auto& session : sessions) {
        if (trim(session.name).empty()) {
            ++st.dropped_sessions;
            continue;
        }
        std::vector<std::string> concepts;
        std::set<std::string> seen;
        for (auto& c : session.key_concepts) {
            const std::string cleaned = trim(c);
            if (cleaned.empty()) continue;
            if (seen.insert(normalize_name(cleaned)).second) {
                concepts.push_back(cleaned);
            } else {
                ++st.deduped_concepts;
            }
        }
        if (concepts.empty()) {
            ++st.dropped_sessions;
            continue;
        }
        session.key_concepts = std::move(concepts);
        session.index = static_cast<int>(out.size()) + 1;
        out.push_back(std::move(session));
    }
    const size_t n = out.size();
    if (n < 10 || n > 30) st.session_count_warning = true;
    return out;
}

std::vector<ClassSession> extract_class_details(Gateway& gateway, const Subject& s,
                                                const DisciplineRef& d, const std::string& raw,
                                                const StageParams& conversion,
                                                const std::string& request_id,
                                                SyllabusStats* stats) {
    if (trim(raw).empty()) throw ExtractionFailed("syllabus text is empty");
    SyllabusStats local;
    SyllabusStats& st = stats ? *stats : local;

    CompletionRequest req;
    req.purpose = Purpose::class_details;
    req.model = conversion.model;
    req.messages = {{"user", prompts::syllabus_prompt(s.name, s.level, s.subtopics, d.name)},
                    {"assistant", raw},
                    {"user", prompts::class_details_conversion_prompt()}};
    req.sampling = conversion.sampling;
    req.request_id = request_id;
    const CompletionResult result = gateway.complete(req);

    std::vector<ClassSession> sessions;
    try {
        const ExtractionResult extracted = extract_fenced_records(result.text);
        st.malformed_lines += extracted.malformed_lines;
        for (const auto& record : extracted.records) {
            ClassSession session;
            if (record.contains("session_name")) session.name = trim(coerce_string(record["session_name"]));
            if (record.contains("description")) session.description = trim(coerce_string(record["description"]));
            if (record.contains("key_concepts")) {
                const auto& kc = record["key_concepts"];
                if (kc.is_array()) {
                    for (const auto& c : kc) session.key_concepts.push_back(coerce_string(c));
                } else {
                    session.key_concepts.push_back(coerce_string(kc));
                }
            }
            sessions.push_back(std::move(session));
        }
    } catch (const NoFencedBlock&) {
        throw ExtractionFailed("class-details completion contains no fenced block");
    }

    std::vector<ClassSession> valid = validate_sessions(std::move(sessions), &st);
    if (valid.empty()) {
        throw ExtractionFailed("no valid class sessions for subject '" + s.name + "'");
    }
    return valid;
}

std::string extract_introduction(const std::string& raw) {
    std::string intro;
    for (const auto& line : split_lines(raw)) {
        if (is_session_heading(line)) break;
        if (!intro.empty()) intro += '\n';
        intro += line;
    }
    return trim(intro);
}

nlohmann::json syllabus_to_json(const Syllabus& sy) {
    nlohmann::json sessions = nlohmann::json::array();
    for (const auto& s : sy.sessions) {
        sessions.push_back({{"index", s.index},
                            {"name", s.name},
                            {"description", s.description},
                            {"key_concepts", s.key_concepts}});
    }
    return {{"id", sy.id},
            {"subject", {{"discipline_id", sy.subject_ref.discipline_id},
                         {"name", sy.subject_ref.name},
                         {"level", sy.subject_ref.level}}},
            {"introduction", sy.introduction},
            {"sessions", sessions},
            {"raw_text", sy.raw_text}};
}

Syllabus syllabus_from_json(const nlohmann::json& j) {
    Syllabus sy;
    sy.id = j.at("id").get<std::string>();
    sy.subject_ref.discipline_id = j.at("subject").at("discipline_id").get<std::string>();
    sy.subject_ref.name = j.at("subject").at("name").get<std::string>();
    sy.subject_ref.level = j.at("subject").at("level").get<std::string>();
    sy.introduction = j.at("introduction").get<std::string>();
    for (const auto& s : j.at("sessions")) {
        ClassSession session;
        session.index = s.at("index").get<int>();
        session.name = s.at("name").get<std::string>();
        session.description = s.value("description", "");
        session.key_concepts = s.at("key_concepts").get<std::vector<std::string>>();
        sy.sessions.push_back(std::move(session));
    }
    sy.raw_text = j.value("raw_text", "");
    return sy;
}

}  // namespace curricula
