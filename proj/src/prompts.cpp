#include "curricula/prompts.hpp"

#include "curricula/text.hpp"

namespace curricula::prompts {

namespace {

constexpr const char* kOutlineFormat =
    "Format the answer as a plain indented outline: top-level lines are fields, "
    "indented lines are sub-fields, and mark every terminal discipline line with "
    "the suffix [discipline]. Use two spaces per indentation level, at most three "
    "levels, and output nothing except the outline.";

}  // namespace

std::vector<std::string> taxonomy_draft_prompts() {
    return {
        std::string("list all fields of human knowledge and capabilities. Break every field into "
                    "its sub-fields and ultimately into distinct disciplines. ") +
            kOutlineFormat,
        std::string("Enumerate the major areas of human knowledge and capabilities, covering both "
                    "academic education and vocational training. Decompose each area into "
                    "sub-fields and concrete disciplines. ") +
            kOutlineFormat,
    };
}

std::string subjects_prompt(const std::string& discipline, int query_index, int n_queries) {
    std::string p;
    p += "Act as an education expert of the discipline " + discipline +
         " and design a list of subjects a student should learn. For every subject, state its "
         "name, the level at which it is usually taught, and its main subtopics.";
    p += " This is query " + std::to_string(query_index + 1) + " of " + std::to_string(n_queries) +
         " in a brainstorming series; include subjects that earlier answers to this request would "
         "be likely to miss.";
    return p;
}

std::string subjects_conversion_prompt() {
    return "Awesome! Transform the above to jsonl format so that it is easier for a computer to "
           "understand. Put the jsonl output between \"```\" \"```\" tags\n\n"
           "For each line, use the keys \"subject_name\", \"level\" and \"subtopics\"";
}

std::string syllabus_prompt(const std::string& subject, const std::string& level,
                            const std::vector<std::string>& subtopics,
                            const std::string& discipline) {
    std::string p;
    p += "Act as an education expert of the discipline " + discipline + ". Design a syllabus for the ";
    p += kSubjectQuote;
    p += subject + "\" taught at the " + level + " level";
    if (!subtopics.empty()) {
        p += ", covering these subtopics: " + join(subtopics, ", ");
    }
    p += ". Start with a short introduction stating the objectives and expected outcomes of the "
         "subject. Then break the subject into class sessions: number every session as "
         "\"Session N: <name>\", give each session a brief description, and list the detailed key "
         "concepts students need to master in that session.";
    return p;
}

std::string class_details_conversion_prompt() {
    return "Awesome! Transform the above syllabus to jsonl format so that it is easier for a "
           "computer to understand. Put the jsonl output between \"```\" \"```\" tags\n\n"
           "For each line, use the keys \"session_name\", \"description\" and \"key_concepts\" "
           "(a list of strings)";
}

std::string judge_prompt(const std::string& instruction, const std::string& response_a,
                         const std::string& response_b) {
    std::string p;
    p += "You are an impartial judge. Two different models responded to the instruction below. "
         "Assign each response an overall score between 1 and 10 with respect to the helpfulness, "
         "relevance, accuracy, and level of detail of the response. A higher score indicates "
         "better overall performance.\n\n";
    p += kInstructionTag;
    p += "\n" + instruction + "\n\n";
    p += kResponseATag;
    p += "\n" + response_a + "\n\n";
    p += kResponseBTag;
    p += "\n" + response_b + "\n\n";
    p += "Output exactly two lines and nothing else:\nScore A: <integer>\nScore B: <integer>";
    return p;
}

}  // namespace curricula::prompts
