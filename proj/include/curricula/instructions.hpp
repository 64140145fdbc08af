#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "curricula/sampler.hpp"

namespace curricula {

/// A generated question-answer pair with full provenance. The provenance
/// fields (plus the referenced syllabus) suffice to rebuild the exact
/// question prompt.
struct InstructionPair {
    std::string id;  // syllabus_ref + "#" + selection canonical key
    std::string question;
    std::string answer;
    std::string discipline_id;
    std::string subject_name;
    std::string level;
    ConceptSelection selection;
    std::vector<std::string> session_names;  // names of the selected sessions
    std::string question_model;
    std::string answer_model;
    SamplingParams question_sampling;
    SamplingParams answer_sampling;
    uint64_t run_seed = 0;
};

/// Builds the question prompt: syllabus introduction, the selected sessions
/// and concepts, the instruction that students have learned up to the latest
/// selected session, and — for dual-session selections — the instruction to
/// leverage multiple key concepts across different class sessions.
/// Deterministic in its inputs. SelectionMismatch if the selection references
/// sessions or concepts absent from the syllabus.
std::vector<Message> build_question_prompt(const Syllabus& sy, const ConceptSelection& sel);

/// One gateway call with purpose=question; the trimmed completion. An empty
/// completion is retried once, then EmptyCompletion.
std::string generate_question(Gateway& gateway, const Syllabus& sy, const ConceptSelection& sel,
                              const StageParams& params, const std::string& request_id);

/// One gateway call with purpose=answer over the bare question; the trimmed
/// completion. An empty question surfaces as GatewayError{BadRequest}; an
/// empty completion is retried once, then EmptyCompletion.
std::string generate_answer(Gateway& gateway, const std::string& question,
                            const StageParams& params, const std::string& request_id);

/// JSON Lines form with stable field order.
nlohmann::ordered_json pair_to_json(const InstructionPair& p);
InstructionPair pair_from_json(const nlohmann::json& j);

}  // namespace curricula
