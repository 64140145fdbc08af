#include "curricula/instructions.hpp"

#include <algorithm>
#include <map>

#include "curricula/errors.hpp"
#include "curricula/prompts.hpp"
#include "curricula/text.hpp"

namespace curricula {

namespace {

std::string trimmed_completion(Gateway& gateway, const CompletionRequest& req) {
    std::string text = trim(gateway.complete(req).text);
    if (!text.empty()) return text;
    CompletionRequest retry = req;
    retry.request_id += "/retry";
    text = trim(gateway.complete(retry).text);
    if (text.empty()) {
        throw EmptyCompletion("empty completion for request '" + req.request_id + "'");
    }
    return text;
}

}  // namespace

std::vector<Message> build_question_prompt(const Syllabus& sy, const ConceptSelection& sel) {
    if (sel.syllabus_ref != sy.id) {
        throw SelectionMismatch("selection belongs to '" + sel.syllabus_ref + "', not '" + sy.id +
                                "'");
    }
    std::map<int, const ClassSession*> by_index;
    for (const auto& session : sy.sessions) by_index[session.index] = &session;

    std::string p;
    p += "You are preparing homework for the ";
    p += prompts::kSubjectQuote;
    p += sy.subject_ref.name + "\" taught at the " + sy.subject_ref.level + " level.\n\n";
    if (!sy.introduction.empty()) {
        p += "Syllabus introduction:\n" + sy.introduction + "\n\n";
    }
    p += prompts::kSelectedSessionsHeader;
    p += "\n";
    int max_index = 0;
    for (int idx : sel.session_indices) {
        auto it = by_index.find(idx);
        if (it == by_index.end()) {
            throw SelectionMismatch("selection references session " + std::to_string(idx) +
                                    " which is not in syllabus '" + sy.id + "'");
        }
        p += "Session " + std::to_string(idx) + ": " + it->second->name + "\n";
        max_index = std::max(max_index, idx);
    }
    p += "\n";
    p += prompts::kSelectedConceptsHeader;
    p += "\n";
    for (const auto& c : sel.concepts) {
        auto it = by_index.find(c.session_index);
        if (it == by_index.end() ||
            std::find(it->second->key_concepts.begin(), it->second->key_concepts.end(),
                      c.concept_text) == it->second->key_concepts.end()) {
            throw SelectionMismatch("selection references concept '" + c.concept_text +
                                    "' which is not in session " +
                                    std::to_string(c.session_index));
        }
        p += "- " + c.concept_text + " (Session " + std::to_string(c.session_index) + ")\n";
    }
    p += "\n";
    p += "Consider that students have learned up to Session " + std::to_string(max_index) +
         " and have not seen later material. Create one homework question that exercises the "
         "selected key concepts.";
    if (sel.strategy == Strategy::dual_session) {
        p += " Try to leverage multiple key concepts across different class sessions.";
    }
    p += " Output only the question text.";
    return {{"user", p}};
}

std::string generate_question(Gateway& gateway, const Syllabus& sy, const ConceptSelection& sel,
                              const StageParams& params, const std::string& request_id) {
    CompletionRequest req;
    req.purpose = Purpose::question;
    req.model = params.model;
    req.messages = build_question_prompt(sy, sel);
    req.sampling = params.sampling;
    req.request_id = request_id;
    return trimmed_completion(gateway, req);
}

std::string generate_answer(Gateway& gateway, const std::string& question,
                            const StageParams& params, const std::string& request_id) {
    if (trim(question).empty()) {
        throw GatewayError(GatewayError::Kind::BadRequest, "cannot answer an empty question");
    }
    CompletionRequest req;
    req.purpose = Purpose::answer;
    req.model = params.model;
    req.messages = {{"user", question}};
    req.sampling = params.sampling;
    req.request_id = request_id;
    return trimmed_completion(gateway, req);
}

nlohmann::ordered_json pair_to_json(const InstructionPair& p) {
    nlohmann::ordered_json concepts = nlohmann::ordered_json::array();
    for (const auto& c : p.selection.concepts) {
        concepts.push_back({{"session", c.session_index}, {"concept", c.concept_text}});
    }
    nlohmann::ordered_json j;
    j["id"] = p.id;
    j["question"] = p.question;
    j["answer"] = p.answer;
    j["provenance"] = {
        {"discipline_id", p.discipline_id},
        {"subject_name", p.subject_name},
        {"level", p.level},
        {"syllabus_ref", p.selection.syllabus_ref},
        {"strategy", strategy_name(p.selection.strategy)},
        {"session_indices", p.selection.session_indices},
        {"session_names", p.session_names},
        {"concepts", concepts},
        {"selection_key", p.selection.canonical_key},
        {"question_model", p.question_model},
        {"answer_model", p.answer_model},
        {"question_sampling",
         {{"temperature", p.question_sampling.temperature},
          {"top_p", p.question_sampling.top_p},
          {"max_tokens", p.question_sampling.max_tokens}}},
        {"answer_sampling",
         {{"temperature", p.answer_sampling.temperature},
          {"top_p", p.answer_sampling.top_p},
          {"max_tokens", p.answer_sampling.max_tokens}}},
        {"run_seed", p.run_seed},
    };
    return j;
}

InstructionPair pair_from_json(const nlohmann::json& j) {
    InstructionPair p;
    p.id = j.at("id").get<std::string>();
    p.question = j.at("question").get<std::string>();
    p.answer = j.at("answer").get<std::string>();
    const auto& prov = j.at("provenance");
    p.discipline_id = prov.at("discipline_id").get<std::string>();
    p.subject_name = prov.at("subject_name").get<std::string>();
    p.level = prov.at("level").get<std::string>();
    p.selection.syllabus_ref = prov.at("syllabus_ref").get<std::string>();
    p.selection.strategy = strategy_from_name(prov.at("strategy").get<std::string>());
    p.selection.session_indices = prov.at("session_indices").get<std::vector<int>>();
    for (const auto& c : prov.at("concepts")) {
        p.selection.concepts.push_back(
            {c.at("session").get<int>(), c.at("concept").get<std::string>()});
    }
    p.selection.canonical_key = prov.at("selection_key").get<std::string>();
    p.session_names = prov.at("session_names").get<std::vector<std::string>>();
    p.question_model = prov.at("question_model").get<std::string>();
    p.answer_model = prov.at("answer_model").get<std::string>();
    const auto& qs = prov.at("question_sampling");
    p.question_sampling = {qs.at("temperature").get<double>(), qs.at("top_p").get<double>(),
                           qs.at("max_tokens").get<int>()};
    const auto& as = prov.at("answer_sampling");
    p.answer_sampling = {as.at("temperature").get<double>(), as.at("top_p").get<double>(),
                         as.at("max_tokens").get<int>()};
    p.run_seed = prov.at("run_seed").get<uint64_t>();
    return p;
}

}  // namespace curricula
