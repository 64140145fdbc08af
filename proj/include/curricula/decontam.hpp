#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace curricula {

enum class Split { train, test };

const char* split_name(Split s);
Split split_from_name(const std::string& name);

struct BenchmarkCorpus {
    std::string name;
    Split split = Split::test;
    std::vector<std::string> prompts;
};

enum class MatchRule { prompt_in_question, question_in_prompt, ngram_overlap };

const char* rule_name(MatchRule r);

struct MatchSource {
    std::string corpus;
    Split split = Split::test;
    size_t prompt_index = 0;
    MatchRule rule = MatchRule::prompt_in_question;
    std::string detail;  // for n-gram hits: the shared gram
};

struct MatchReport {
    bool contaminated = false;
    std::vector<MatchSource> sources;  // one entry per (prompt, rule)
};

/// Lowercase, punctuation stripped (erased, not spaced), whitespace runs
/// collapsed to single spaces, trimmed.
std::string normalize_text(std::string_view s);

std::vector<std::string> tokenize_normalized(const std::string& normalized);

class DecontamIndex {
public:
    /// n is the n-gram order (>= 3). Prompts whose normalized form is shorter
    /// than n tokens participate only in the substring rules; prompts that
    /// normalize to nothing are ignored entirely.
    DecontamIndex(const std::vector<BenchmarkCorpus>& corpora, int n = 10);

    /// Contaminated iff (a) a normalized prompt is a substring of the
    /// normalized question, (b) the normalized question is a substring of a
    /// normalized prompt, or (c) the question shares >= 1 normalized n-gram
    /// with an indexed prompt. An empty normalized question is always clean.
    MatchReport is_contaminated(const std::string& question) const;

    int n() const { return n_; }
    size_t prompt_count() const { return prompts_.size(); }

private:
    struct Entry {
        std::string corpus;
        Split split;
        size_t prompt_index;
        std::string normalized;
    };

    int n_;
    std::vector<Entry> prompts_;
    std::unordered_map<std::string, std::vector<size_t>> gram_map_;
};

struct RemovalReport {
    size_t input = 0;
    size_t kept = 0;
    size_t removed = 0;
    /// (corpus, split, rule) -> number of removed pairs attributing a match
    /// to that source. One removed pair may count against several sources.
    std::vector<std::tuple<std::string, Split, MatchRule, size_t>> by_source;

    nlohmann::json to_json() const;
};

/// Streams JSON Lines pairs from `in`: clean lines pass through to `kept`
/// byte-identical and in order; contaminated ones go to `removed` (when
/// given) as {"pair": ..., "matches": [...]} records. The question is read
/// from `question_field` of each line.
RemovalReport filter_pairs(std::istream& in, std::ostream& kept, std::ostream* removed,
                           const DecontamIndex& index,
                           const std::string& question_field = "question");

/// format "text": one prompt per line, blank lines skipped; format "jsonl":
/// `prompt_field` of each record.
BenchmarkCorpus load_corpus(const std::filesystem::path& path, const std::string& name,
                            Split split, const std::string& format,
                            const std::string& prompt_field);

}  // namespace curricula
