#pragma once

#include <string>
#include <vector>

namespace curricula::prompts {

/// Literal markers shared between prompt builders and the mock backend's
/// scanners. Changing one side requires changing the other.
inline constexpr const char* kSubjectQuote = "subject \"";
inline constexpr const char* kSelectedSessionsHeader = "Selected class sessions:";
inline constexpr const char* kSelectedConceptsHeader = "Selected key concepts:";
inline constexpr const char* kInstructionTag = "[Instruction]";
inline constexpr const char* kResponseATag = "[Response A]";
inline constexpr const char* kResponseBTag = "[Response B]";

/// Built-in phrasings for taxonomy drafting; completions from all of them are
/// merged into one draft.
std::vector<std::string> taxonomy_draft_prompts();

/// Free-text expert prompt for one subject-listing query. The query ordinal is
/// embedded so repeated queries ask for fresh ground rather than repeats.
std::string subjects_prompt(const std::string& discipline, int query_index, int n_queries);

/// Second-turn prompt converting the free-text subject list to fenced JSON
/// Lines with keys subject_name / level / subtopics.
std::string subjects_conversion_prompt();

std::string syllabus_prompt(const std::string& subject, const std::string& level,
                            const std::vector<std::string>& subtopics,
                            const std::string& discipline);

/// Second-turn prompt converting a raw syllabus to fenced JSON Lines with keys
/// session_name / description / key_concepts.
std::string class_details_conversion_prompt();

std::string judge_prompt(const std::string& instruction, const std::string& response_a,
                         const std::string& response_b);

}  // namespace curricula::prompts
