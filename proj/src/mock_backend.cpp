#include "curricula/mock_backend.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "curricula/errors.hpp"
#include "curricula/fenced.hpp"
#include "curricula/prompts.hpp"
#include "curricula/rng.hpp"
#include "curricula/text.hpp"

namespace curricula {

namespace {

const std::vector<std::string> kFieldPool = {
    "Formal Sciences", "Natural Sciences", "Social Sciences", "Humanities",
    "Applied Sciences", "Services",        "Manufacturing",   "Agriculture",
};
const std::vector<std::string> kBranchAdjectives = {
    "Theoretical", "Applied", "Modern", "Classical", "Computational", "Experimental",
};
const std::vector<std::string> kBranchNouns = {
    "Analysis", "Systems", "Methods", "Studies", "Design", "Operations",
};
const std::vector<std::string> kDisciplinePool = {
    "Algebra",    "Mechanics", "Chemistry",  "Sociology", "Retailing",  "Logistics",
    "Linguistics", "Optics",    "Statistics", "Welding",   "Accounting", "Robotics",
    "Geology",     "Nursing",   "Pedagogy",   "Horticulture",
};
const std::vector<std::string> kSubjectAdjectives = {
    "Foundations of", "Intermediate", "Advanced", "Applied", "Quantitative",
    "Historical",     "Practical",    "Modern",   "Comparative",
};
const std::vector<std::string> kSubjectTopics = {
    "Structures", "Dynamics",  "Reasoning", "Materials", "Networks",  "Measurement",
    "Ecology",    "Mechanisms", "Mapping",   "Synthesis", "Valuation", "Diagnostics",
};
const std::vector<std::string> kLevelPool = {
    "primary school", "secondary school", "undergraduate", "graduate", "vocational certificate",
};
const std::vector<std::string> kConceptWords = {
    "gradient", "lattice",  "cadence",  "torque",   "ledger",  "valence",
    "syntax",   "manifold", "polymer",  "fulcrum",  "tariff",  "enzyme",
    "voltage",  "contour",  "quorum",   "tensor",   "solvent", "alloy",
};

std::string pick_distinct(Rng& rng, const std::vector<std::string>& pool,
                          std::set<std::string>& used) {
    for (int tries = 0; tries < 8; ++tries) {
        const std::string& candidate = pool[rng.below(pool.size())];
        if (used.insert(candidate).second) return candidate;
    }
    // Pool exhausted for practical purposes: disambiguate with a counter.
    std::string fallback;
    for (int i = 2;; ++i) {
        fallback = pool[rng.below(pool.size())] + " " + std::to_string(i);
        if (used.insert(fallback).second) return fallback;
    }
}

uint64_t request_hash(uint64_t seed, const CompletionRequest& req) {
    uint64_t h = fnv1a_u64(seed);
    h = fnv1a(purpose_name(req.purpose), h);
    for (const auto& m : req.messages) {
        h = fnv1a(m.role, h);
        h = fnv1a(m.text, h);
    }
    return h;
}

std::string last_text(const CompletionRequest& req, const std::string& role) {
    for (auto it = req.messages.rbegin(); it != req.messages.rend(); ++it) {
        if (it->role == role) return it->text;
    }
    return {};
}

/// Extracts the text between `after` and `before` (or end) in `s`.
std::string slice_between(const std::string& s, const std::string& after,
                          const std::string& before) {
    const size_t start = s.find(after);
    if (start == std::string::npos) return {};
    const size_t from = start + after.size();
    const size_t end = before.empty() ? std::string::npos : s.find(before, from);
    return trim(end == std::string::npos ? s.substr(from) : s.substr(from, end - from));
}

std::string gen_taxonomy(Rng& rng) {
    std::string out;
    const int n_fields = 2 + static_cast<int>(rng.below(2));
    std::set<std::string> used_fields;
    for (int f = 0; f < n_fields; ++f) {
        out += pick_distinct(rng, kFieldPool, used_fields) + "\n";
        std::set<std::string> used_children;
        const int n_direct = static_cast<int>(rng.below(2));  // disciplines right under the field
        for (int d = 0; d < n_direct; ++d) {
            out += "  " + pick_distinct(rng, kDisciplinePool, used_children) + " [discipline]\n";
        }
        const int n_sub = 1 + static_cast<int>(rng.below(2));
        for (int s = 0; s < n_sub; ++s) {
            std::string sub;
            do {
                sub = kBranchAdjectives[rng.below(kBranchAdjectives.size())] + " " +
                      kBranchNouns[rng.below(kBranchNouns.size())];
            } while (!used_children.insert(sub).second);
            out += "  " + sub + "\n";
            std::set<std::string> used_leaves;
            const int n_disc = 2 + static_cast<int>(rng.below(2));
            for (int d = 0; d < n_disc; ++d) {
                out += "    " + pick_distinct(rng, kDisciplinePool, used_leaves) + " [discipline]\n";
            }
        }
    }
    return out;
}

nlohmann::json gen_subject_records(Rng& rng) {
    nlohmann::json records = nlohmann::json::array();
    const int n = 6 + static_cast<int>(rng.below(7));  // 6..12
    std::set<std::string> used_names;
    for (int i = 0; i < n; ++i) {
        std::string name;
        do {
            name = kSubjectAdjectives[rng.below(kSubjectAdjectives.size())] + " " +
                   kSubjectTopics[rng.below(kSubjectTopics.size())];
        } while (!used_names.insert(name).second);
        nlohmann::json subtopics = nlohmann::json::array();
        const int n_topics = 2 + static_cast<int>(rng.below(4));
        for (int t = 0; t < n_topics; ++t) {
            subtopics.push_back(kConceptWords[rng.below(kConceptWords.size())] + " " +
                                std::to_string(t + 1));
        }
        records.push_back({
            {"subject_name", name},
            {"level", kLevelPool[rng.below(kLevelPool.size())]},
            {"subtopics", subtopics},
        });
    }
    return records;
}

std::string fence_records(const nlohmann::json& records) {
    std::string out = "```\n";
    for (const auto& record : records) out += record.dump() + "\n";
    out += "```";
    return out;
}

std::string gen_subjects(Rng& rng, const CompletionRequest& req) {
    const std::string prompt = last_text(req, "user");
    std::string discipline = slice_between(prompt, "the discipline ", " and design");
    if (discipline.empty()) discipline = "this discipline";
    std::string out = "Here is a curated list of subjects a student of " + discipline +
                      " should learn, from foundational to advanced.\n\n";
    out += fence_records(gen_subject_records(rng));
    out += "\nThese subjects build on one another in the order listed.";
    return out;
}

std::string gen_format_conversion(Rng& rng, const CompletionRequest& req) {
    // Re-emit whatever structured records the conversation already contains.
    for (auto it = req.messages.rbegin(); it != req.messages.rend(); ++it) {
        if (it->role != "assistant") continue;
        try {
            const ExtractionResult found = extract_fenced_records(it->text);
            if (!found.records.empty()) {
                nlohmann::json records = nlohmann::json::array();
                for (const auto& r : found.records) records.push_back(r);
                return fence_records(records);
            }
        } catch (const NoFencedBlock&) {
            // fall through to the generators below
        }
    }
    return fence_records(gen_subject_records(rng));
}

std::string gen_syllabus(Rng& rng, const CompletionRequest& req) {
    const std::string prompt = last_text(req, "user");
    std::string subject = slice_between(prompt, prompts::kSubjectQuote, "\"");
    if (subject.empty()) subject = "the subject";
    std::string level = slice_between(prompt, "at the ", " level");
    if (level.empty()) level = "introductory";

    std::ostringstream out;
    out << "This syllabus introduces " << subject << " at the " << level
        << " level. The objective is to take students from first principles to independent "
           "problem solving, with expected outcomes assessed through graded homework.\n\n";
    const int n_sessions = 10 + static_cast<int>(rng.below(5));  // 10..14
    for (int i = 1; i <= n_sessions; ++i) {
        const std::string title = kSubjectAdjectives[rng.below(kSubjectAdjectives.size())] + " " +
                                  kConceptWords[rng.below(kConceptWords.size())] + " " +
                                  kSubjectTopics[rng.below(kSubjectTopics.size())];
        out << "Session " << i << ": " << title << "\n";
        out << "Description: This session develops " << title << " and its role within " << subject
            << ".\n";
        std::set<std::string> used;
        std::vector<std::string> concepts;
        const int n_concepts = 4 + static_cast<int>(rng.below(3));  // 4..6
        for (int c = 0; c < n_concepts; ++c) {
            concepts.push_back(pick_distinct(rng, kConceptWords, used));
        }
        out << "Key Concepts: " << join(concepts, "; ") << "\n\n";
    }
    return out.str();
}

std::string gen_class_details(Rng& rng, const CompletionRequest& req) {
    nlohmann::json records = nlohmann::json::array();
    const std::string raw = last_text(req, "assistant");
    nlohmann::json current;
    auto flush = [&] {
        if (!current.is_null()) records.push_back(std::move(current));
        current = nlohmann::json();
    };
    for (const auto& line : split_lines(raw)) {
        const std::string t = trim(line);
        if (starts_with(t, "Session ")) {
            flush();
            const size_t colon = t.find(": ");
            current = {{"session_name", colon == std::string::npos ? t : t.substr(colon + 2)},
                       {"description", ""},
                       {"key_concepts", nlohmann::json::array()}};
        } else if (starts_with(t, "Description: ") && current.is_object()) {
            current["description"] = t.substr(std::string("Description: ").size());
        } else if (starts_with(t, "Key Concepts: ") && current.is_object()) {
            nlohmann::json concepts = nlohmann::json::array();
            std::string rest = t.substr(std::string("Key Concepts: ").size());
            size_t start = 0;
            while (start <= rest.size()) {
                const size_t sep = rest.find("; ", start);
                const std::string item =
                    trim(sep == std::string::npos ? rest.substr(start)
                                                  : rest.substr(start, sep - start));
                if (!item.empty()) concepts.push_back(item);
                if (sep == std::string::npos) break;
                start = sep + 2;
            }
            current["key_concepts"] = std::move(concepts);
        }
    }
    flush();
    if (records.empty()) {
        for (int i = 1; i <= 3; ++i) {
            records.push_back({
                {"session_name", "Session topic " + std::to_string(i)},
                {"description", "Auto-generated session."},
                {"key_concepts",
                 {kConceptWords[rng.below(kConceptWords.size())],
                  kConceptWords[rng.below(kConceptWords.size())] + " applications"}},
            });
        }
    }
    return fence_records(records);
}

std::string gen_question(Rng& rng, const CompletionRequest& req) {
    const std::string prompt = last_text(req, "user");
    std::vector<std::string> concepts;
    bool in_concepts = false;
    for (const auto& line : split_lines(prompt)) {
        const std::string t = trim(line);
        if (t == prompts::kSelectedConceptsHeader) {
            in_concepts = true;
            continue;
        }
        if (!in_concepts) continue;
        if (!starts_with(t, "- ")) {
            if (!concepts.empty()) break;
            continue;
        }
        std::string item = t.substr(2);
        const size_t paren = item.rfind(" (Session");
        if (paren != std::string::npos) item = item.substr(0, paren);
        concepts.push_back(trim(item));
    }
    if (concepts.empty()) concepts.push_back("the main idea of this session");
    const bool dual = concepts.size() > 1 && prompt.find("across different class sessions") !=
                                                 std::string::npos;
    std::string out;
    if (dual) {
        out = "Homework: Construct a worked problem that connects " + concepts.front() + " with " +
              concepts.back() +
              ", state the assumptions that link the two ideas, and solve it step by step.";
    } else {
        out = "Homework: Explain " + concepts.front() +
              " in your own words, then solve one representative exercise that depends on it.";
    }
    if (rng.below(2) == 0) out += " Justify every step of your reasoning.";
    return out;
}

std::string gen_answer(Rng& rng, const CompletionRequest& req) {
    const std::string question = last_text(req, "user");
    const auto words = split_ws(question);
    std::string lead;
    for (size_t i = 0; i < words.size() && i < 9; ++i) {
        if (!lead.empty()) lead += ' ';
        lead += words[i];
    }
    std::string out = "Restating the task: " + lead + "...\n";
    out += "Step 1: identify the quantities involved and what is being asked.\n";
    out += "Step 2: apply the relevant definition and work through the computation.\n";
    out += "Step 3: check the result against a limiting case.\n";
    out += "Conclusion: the exercise is resolved by the " +
           kConceptWords[rng.below(kConceptWords.size())] + " argument above.";
    return out;
}

std::string gen_judge(const CompletionRequest& req) {
    const std::string prompt = last_text(req, "user");
    const std::string body_a = slice_between(prompt, prompts::kResponseATag, prompts::kResponseBTag);
    std::string body_b = slice_between(prompt, prompts::kResponseBTag, "\n\nOutput exactly");
    if (body_b.empty()) body_b = slice_between(prompt, prompts::kResponseBTag, "");
    const int score_a = 1 + static_cast<int>(fnv1a(body_a) % 10);
    const int score_b = 1 + static_cast<int>(fnv1a(body_b) % 10);
    return "Score A: " + std::to_string(score_a) + "\nScore B: " + std::to_string(score_b);
}

}  // namespace

CompletionResult MockBackend::complete(const CompletionRequest& req) {
    Rng rng(request_hash(seed_, req));
    std::string text;
    switch (req.purpose) {
        case Purpose::taxonomy: text = gen_taxonomy(rng); break;
        case Purpose::subjects: text = gen_subjects(rng, req); break;
        case Purpose::format_conversion: text = gen_format_conversion(rng, req); break;
        case Purpose::syllabus: text = gen_syllabus(rng, req); break;
        case Purpose::class_details: text = gen_class_details(rng, req); break;
        case Purpose::question: text = gen_question(rng, req); break;
        case Purpose::answer: text = gen_answer(rng, req); break;
        case Purpose::judge: text = gen_judge(req); break;
        default: throw UnknownPurpose("mock backend has no generator for this purpose");
    }
    CompletionResult result;
    result.text = std::move(text);
    result.model = req.model;
    long prompt_chars = 0;
    for (const auto& m : req.messages) prompt_chars += static_cast<long>(m.text.size());
    result.usage.prompt_tokens = prompt_chars / 4;
    result.usage.completion_tokens = static_cast<long>(result.text.size()) / 4;
    result.latency_ms = 0;
    return result;
}

}  // namespace curricula
