#include "curricula/decontam.hpp"

#include <cctype>
#include <istream>
#include <map>
#include <ostream>
#include <set>

#include <nlohmann/json.hpp>

#include "curricula/errors.hpp"
#include "curricula/jsonl.hpp"
#include "curricula/text.hpp"

namespace curricula {

const char* split_name(Split s) { return s == Split::train ? "train" : "test"; }

Split split_from_name(const std::string& name) {
    if (name == "train") return Split::train;
    if (name == "test") return Split::test;
    throw ParseError("unknown split '" + name + "'");
}

const char* rule_name(MatchRule r) {
    switch (r) {
        case MatchRule::prompt_in_question: return "prompt_in_question";
        case MatchRule::question_in_prompt: return "question_in_prompt";
        case MatchRule::ngram_overlap: return "ngram_overlap";
    }
    throw ParseError("match rule out of range");
}

std::string normalize_text(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_space = true;
    for (unsigned char c : s) {
        if (std::isspace(c)) {
            if (!in_space) out.push_back(' ');
            in_space = true;
        } else if (std::isalnum(c)) {
            out.push_back(static_cast<char>(std::tolower(c)));
            in_space = false;
        }
        // punctuation is erased, joining its neighbours
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

std::vector<std::string> tokenize_normalized(const std::string& normalized) {
    return split_ws(normalized);
}

DecontamIndex::DecontamIndex(const std::vector<BenchmarkCorpus>& corpora, int n) : n_(n) {
    if (corpora.empty()) throw ConfigError("decontamination index needs at least one corpus");
    if (n < 3) throw ConfigError("n-gram order must be >= 3");
    for (const auto& corpus : corpora) {
        for (size_t i = 0; i < corpus.prompts.size(); ++i) {
            std::string normalized = normalize_text(corpus.prompts[i]);
            if (normalized.empty()) continue;
            const size_t entry_idx = prompts_.size();
            prompts_.push_back({corpus.name, corpus.split, i, std::move(normalized)});
            const std::vector<std::string> tokens =
                tokenize_normalized(prompts_.back().normalized);
            if (tokens.size() < static_cast<size_t>(n_)) continue;
            for (size_t t = 0; t + n_ <= tokens.size(); ++t) {
                std::string gram = tokens[t];
                for (size_t k = 1; k < static_cast<size_t>(n_); ++k) gram += " " + tokens[t + k];
                auto& hits = gram_map_[gram];
                if (hits.empty() || hits.back() != entry_idx) hits.push_back(entry_idx);
            }
        }
    }
}

MatchReport DecontamIndex::is_contaminated(const std::string& question) const {
    MatchReport report;
    const std::string q = normalize_text(question);
    if (q.empty()) return report;
    std::set<std::pair<size_t, MatchRule>> seen;
    auto add = [&](size_t entry_idx, MatchRule rule, std::string detail) {
        if (!seen.insert({entry_idx, rule}).second) return;
        const Entry& e = prompts_[entry_idx];
        report.sources.push_back({e.corpus, e.split, e.prompt_index, rule, std::move(detail)});
        report.contaminated = true;
    };
    for (size_t i = 0; i < prompts_.size(); ++i) {
        if (q.find(prompts_[i].normalized) != std::string::npos) {
            add(i, MatchRule::prompt_in_question, "");
        }
        if (prompts_[i].normalized.find(q) != std::string::npos) {
            add(i, MatchRule::question_in_prompt, "");
        }
    }
    const std::vector<std::string> tokens = tokenize_normalized(q);
    if (tokens.size() >= static_cast<size_t>(n_)) {
        for (size_t t = 0; t + n_ <= tokens.size(); ++t) {
            std::string gram = tokens[t];
            for (size_t k = 1; k < static_cast<size_t>(n_); ++k) gram += " " + tokens[t + k];
            if (auto it = gram_map_.find(gram); it != gram_map_.end()) {
                for (size_t entry_idx : it->second) add(entry_idx, MatchRule::ngram_overlap, gram);
            }
        }
    }
    return report;
}

nlohmann::json RemovalReport::to_json() const {
    nlohmann::json sources = nlohmann::json::array();
    for (const auto& [corpus, split, rule, count] : by_source) {
        sources.push_back({{"corpus", corpus},
                           {"split", split_name(split)},
                           {"rule", rule_name(rule)},
                           {"count", count}});
    }
    return {{"input", input}, {"kept", kept}, {"removed", removed}, {"by_source", sources}};
}

RemovalReport filter_pairs(std::istream& in, std::ostream& kept, std::ostream* removed,
                           const DecontamIndex& index, const std::string& question_field) {
    RemovalReport report;
    std::map<std::tuple<std::string, Split, MatchRule>, size_t> tally;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        ++report.input;
        nlohmann::json record = nlohmann::json::parse(line, nullptr, false);
        if (record.is_discarded() || !record.is_object() || !record.contains(question_field) ||
            !record[question_field].is_string()) {
            throw ParseError("line " + std::to_string(line_no) + ": expected an object with a '" +
                             question_field + "' string field");
        }
        const MatchReport match = index.is_contaminated(record[question_field].get<std::string>());
        if (!match.contaminated) {
            ++report.kept;
            kept << line << '\n';
            continue;
        }
        ++report.removed;
        for (const auto& src : match.sources) {
            ++tally[{src.corpus, src.split, src.rule}];
        }
        if (removed) {
            nlohmann::json matches = nlohmann::json::array();
            for (const auto& src : match.sources) {
                matches.push_back({{"corpus", src.corpus},
                                   {"split", split_name(src.split)},
                                   {"prompt_index", src.prompt_index},
                                   {"rule", rule_name(src.rule)},
                                   {"detail", src.detail}});
            }
            *removed << nlohmann::json({{"pair", record}, {"matches", matches}}).dump() << '\n';
        }
    }
    for (const auto& [key, count] : tally) {
        report.by_source.emplace_back(std::get<0>(key), std::get<1>(key), std::get<2>(key), count);
    }
    return report;
}

BenchmarkCorpus load_corpus(const std::filesystem::path& path, const std::string& name,
                            Split split, const std::string& format,
                            const std::string& prompt_field) {
    BenchmarkCorpus corpus;
    corpus.name = name;
    corpus.split = split;
    if (format == "text") {
        for (const auto& line : split_lines(read_file(path))) {
            if (!trim(line).empty()) corpus.prompts.push_back(line);
        }
    } else if (format == "jsonl") {
        for (const auto& record : read_jsonl(path)) {
            if (!record.contains(prompt_field) || !record[prompt_field].is_string()) {
                throw ParseError(path.string() + ": corpus record lacks string field '" +
                                 prompt_field + "'");
            }
            corpus.prompts.push_back(record[prompt_field].get<std::string>());
        }
    } else {
        throw ConfigError("corpus format must be 'text' or 'jsonl', got '" + format + "'");
    }
    return corpus;
}

}  // namespace curricula
