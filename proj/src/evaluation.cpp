#include "curricula/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "curricula/errors.hpp"
#include "curricula/jsonl.hpp"
#include "curricula/prompts.hpp"
#include "curricula/rng.hpp"
#include "curricula/text.hpp"

namespace curricula {

namespace {

std::optional<int> integer_after(const std::string& line, size_t from) {
    size_t i = from;
    while (i < line.size() && !(std::isdigit(static_cast<unsigned char>(line[i])) ||
                                (line[i] == '-' && i + 1 < line.size() &&
                                 std::isdigit(static_cast<unsigned char>(line[i + 1]))))) {
        ++i;
    }
    if (i >= line.size()) return std::nullopt;
    size_t end = i + (line[i] == '-' ? 1 : 0);
    while (end < line.size() && std::isdigit(static_cast<unsigned char>(line[end]))) ++end;
    return std::stoi(line.substr(i, end - i));
}

std::optional<int> labelled_score(const std::string& text, const std::string& label) {
    const std::string haystack = to_lower(text);
    size_t pos = 0;
    while ((pos = haystack.find(label, pos)) != std::string::npos) {
        size_t line_end = haystack.find('\n', pos);
        if (line_end == std::string::npos) line_end = haystack.size();
        const std::string line = text.substr(pos, line_end - pos);
        if (auto v = integer_after(line, label.size())) return v;
        pos = line_end;
    }
    return std::nullopt;
}

bool in_range(int score) { return score >= 1 && score <= 10; }

}  // namespace

std::optional<std::pair<int, int>> parse_judge_scores(const std::string& text) {
    auto a = labelled_score(text, "score a");
    auto b = labelled_score(text, "score b");
    if (!a || !b) {
        // Fall back to the first two integers anywhere in the completion.
        std::vector<int> found;
        size_t i = 0;
        while (i < text.size() && found.size() < 2) {
            if (std::isdigit(static_cast<unsigned char>(text[i]))) {
                size_t end = i;
                while (end < text.size() && std::isdigit(static_cast<unsigned char>(text[end])))
                    ++end;
                found.push_back(std::stoi(text.substr(i, end - i)));
                i = end;
            } else {
                ++i;
            }
        }
        if (found.size() < 2) return std::nullopt;
        a = found[0];
        b = found[1];
    }
    if (!in_range(*a) || !in_range(*b)) return std::nullopt;
    return std::make_pair(*a, *b);
}

namespace {

JudgeVerdict one_direction(Gateway& gateway, const std::string& instruction_id,
                           const std::string& instruction, const std::string& model_a,
                           const std::string& slot_a_text, const std::string& model_b,
                           const std::string& slot_b_text, VerdictOrder order,
                           const StageParams& params, const std::string& request_id,
                           JudgeStats* stats) {
    JudgeVerdict verdict;
    verdict.instruction_id = instruction_id;
    verdict.model_a = model_a;
    verdict.model_b = model_b;
    verdict.order = order;

    CompletionRequest req;
    req.purpose = Purpose::judge;
    req.request_id = request_id;
    req.model = params.model;
    req.sampling = params.sampling;
    req.messages = {{"user", prompts::judge_prompt(instruction, slot_a_text, slot_b_text)}};

    for (int attempt = 0; attempt < 2; ++attempt) {
        if (attempt == 1) req.request_id = request_id + "/retry";
        CompletionResult result = gateway.complete(req);
        verdict.raw_judge_text = result.text;
        if (auto scores = parse_judge_scores(result.text)) {
            verdict.score_a = scores->first;
            verdict.score_b = scores->second;
            verdict.valid = true;
            return verdict;
        }
        if (stats) ++stats->unparsed_completions;
    }
    verdict.valid = false;
    if (stats) ++stats->invalid_comparisons;
    return verdict;
}

}  // namespace

std::pair<JudgeVerdict, JudgeVerdict> judge_bidirectional(
    Gateway& gateway, const std::string& instruction_id, const std::string& instruction,
    const std::string& model_a, const std::string& response_a, const std::string& model_b,
    const std::string& response_b, const StageParams& params, const std::string& request_prefix,
    JudgeStats* stats) {
    if (trim(instruction).empty() || trim(response_a).empty() || trim(response_b).empty())
        throw GatewayError(GatewayError::Kind::BadRequest,
                           "judge requires a non-empty instruction and two non-empty responses");
    JudgeVerdict ab =
        one_direction(gateway, instruction_id, instruction, model_a, response_a, model_b,
                      response_b, VerdictOrder::ab, params, request_prefix + "/ab", stats);
    JudgeVerdict ba =
        one_direction(gateway, instruction_id, instruction, model_a, response_b, model_b,
                      response_a, VerdictOrder::ba, params, request_prefix + "/ba", stats);
    return {ab, ba};
}

std::optional<PairwiseResult> aggregate_verdicts(const JudgeVerdict& ab, const JudgeVerdict& ba) {
    if (!ab.valid || !ba.valid) return std::nullopt;
    PairwiseResult r;
    r.instruction_id = ab.instruction_id;
    // Slot scores map back to models through the presentation order: in the
    // swapped call model_b occupied slot A.
    const double a_first = ab.score_a, b_first = ab.score_b;
    const double b_second = ba.score_a, a_second = ba.score_b;
    r.avg_score[ab.model_a] = (a_first + a_second) / 2.0;
    r.avg_score[ab.model_b] = (b_first + b_second) / 2.0;
    return r;
}

double score_gap(const std::vector<PairwiseResult>& results, const std::string& subject_model,
                 const std::string& baseline_model) {
    if (results.empty()) throw NoValidResults("score gap over zero valid comparisons");
    double subject_sum = 0, baseline_sum = 0;
    for (const auto& r : results) {
        auto s = r.avg_score.find(subject_model);
        auto b = r.avg_score.find(baseline_model);
        if (s == r.avg_score.end() || b == r.avg_score.end())
            throw MissingMetadata("result " + r.instruction_id + " lacks a score for " +
                                  (s == r.avg_score.end() ? subject_model : baseline_model));
        subject_sum += s->second;
        baseline_sum += b->second;
    }
    const auto n = static_cast<double>(results.size());
    return subject_sum / n - baseline_sum / n;
}

Grouping grouping_from_name(const std::string& name) {
    if (name == "difficulty_level") return Grouping::difficulty_level;
    if (name == "easy_hard") return Grouping::easy_hard;
    if (name == "discipline") return Grouping::discipline;
    if (name == "field") return Grouping::field;
    throw ConfigError("unknown grouping: " + name);
}

std::vector<GroupRow> group_report(const std::vector<PairwiseResult>& results, Grouping grouping,
                                   const std::map<std::string, std::string>& field_map,
                                   const std::string& subject_model,
                                   const std::string& baseline_model) {
    if (results.empty()) throw NoValidResults("group report over zero valid comparisons");

    auto label_of = [&](const PairwiseResult& r) -> std::string {
        switch (grouping) {
            case Grouping::difficulty_level:
            case Grouping::easy_hard: {
                if (!r.difficulty)
                    throw MissingMetadata("result " + r.instruction_id + " has no difficulty");
                if (grouping == Grouping::difficulty_level) return std::to_string(*r.difficulty);
                return *r.difficulty <= 5 ? "easy" : "hard";
            }
            case Grouping::discipline:
            case Grouping::field: {
                if (r.discipline_id.empty())
                    throw MissingMetadata("result " + r.instruction_id + " has no discipline");
                if (grouping == Grouping::discipline) return r.discipline_id;
                auto it = field_map.find(r.discipline_id);
                if (it == field_map.end())
                    throw MissingMetadata("discipline " + r.discipline_id +
                                          " is not mapped to a field");
                return it->second;
            }
        }
        throw ConfigError("unhandled grouping");
    };

    std::map<std::string, std::vector<PairwiseResult>> buckets;
    for (const auto& r : results) buckets[label_of(r)].push_back(r);

    // Deterministic row order: numeric for difficulty levels, lexicographic
    // otherwise (which also puts easy before hard).
    std::vector<std::string> labels;
    for (const auto& [label, _] : buckets) labels.push_back(label);
    if (grouping == Grouping::difficulty_level) {
        std::sort(labels.begin(), labels.end(), [](const std::string& x, const std::string& y) {
            return std::stoi(x) < std::stoi(y);
        });
    }

    std::vector<GroupRow> rows;
    const auto total = static_cast<double>(results.size());
    for (const auto& label : labels) {
        const auto& members = buckets.at(label);
        GroupRow row;
        row.group = label;
        row.count = members.size();
        row.ratio = static_cast<double>(members.size()) / total;
        row.gap = score_gap(members, subject_model, baseline_model);
        rows.push_back(std::move(row));
    }
    return rows;
}

double ratio_weighted_overall(const std::vector<GroupRow>& rows) {
    double overall = 0;
    for (const auto& row : rows) overall += row.ratio * row.gap;
    return overall;
}

LossGapReport loss_gap(const std::string& benchmark, double l_test, double l_train) {
    if (!(l_test > 0)) throw InvalidLoss("l_test must be positive, got " + std::to_string(l_test));
    if (!(l_train >= 0))
        throw InvalidLoss("l_train must be non-negative, got " + std::to_string(l_train));
    LossGapReport r;
    r.benchmark = benchmark;
    r.l_test = l_test;
    r.l_train = l_train;
    r.delta = l_test - l_train;
    r.delta_pct = r.delta / l_test * 100.0;
    return r;
}

std::string format_loss_gap(const LossGapReport& r) {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(2);
    out << r.benchmark << "  L_test=" << r.l_test << "  L_train=" << r.l_train
        << "  delta=" << r.delta << "  delta_pct=" << r.delta_pct << "%";
    return out.str();
}

nlohmann::json verdict_to_json(const JudgeVerdict& v) {
    return nlohmann::json{{"instruction_id", v.instruction_id},
                          {"model_a", v.model_a},
                          {"model_b", v.model_b},
                          {"order", v.order == VerdictOrder::ab ? "ab" : "ba"},
                          {"score_a", v.score_a},
                          {"score_b", v.score_b},
                          {"raw_judge_text", v.raw_judge_text},
                          {"valid", v.valid}};
}

JudgeVerdict verdict_from_json(const nlohmann::json& j) {
    JudgeVerdict v;
    v.instruction_id = j.at("instruction_id").get<std::string>();
    v.model_a = j.at("model_a").get<std::string>();
    v.model_b = j.at("model_b").get<std::string>();
    const auto order = j.at("order").get<std::string>();
    if (order != "ab" && order != "ba") throw ParseError("bad verdict order: " + order);
    v.order = order == "ab" ? VerdictOrder::ab : VerdictOrder::ba;
    v.score_a = j.at("score_a").get<int>();
    v.score_b = j.at("score_b").get<int>();
    v.raw_judge_text = j.at("raw_judge_text").get<std::string>();
    v.valid = j.at("valid").get<bool>();
    return v;
}

ResponseSet load_responses(const std::filesystem::path& path) {
    ResponseSet set;
    const auto records = read_jsonl(path);
    if (records.empty()) throw EmptyDataset("no response records in " + path.string());
    for (size_t i = 0; i < records.size(); ++i) {
        const auto& rec = records[i];
        const auto where = path.string() + ":" + std::to_string(i + 1);
        if (!rec.contains("instruction_id") || !rec.contains("model") || !rec.contains("response"))
            throw ParseError(where + ": response record needs instruction_id, model, response");
        const auto model = rec.at("model").get<std::string>();
        if (set.model.empty())
            set.model = model;
        else if (set.model != model)
            throw ParseError(where + ": mixed models in one response file (" + set.model +
                             " vs " + model + ")");
        set.by_instruction[rec.at("instruction_id").get<std::string>()] =
            rec.at("response").get<std::string>();
    }
    return set;
}

std::map<std::string, std::string> load_field_map(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("fields") || !j.contains("map"))
        throw ParseError(path.string() + ": field map needs \"fields\" and \"map\"");
    std::set<std::string> fields;
    for (const auto& f : j.at("fields")) fields.insert(f.get<std::string>());
    std::map<std::string, std::string> out;
    for (const auto& [disc, field] : j.at("map").items()) {
        const auto name = field.get<std::string>();
        if (!fields.count(name))
            throw ParseError(path.string() + ": discipline " + disc + " maps to unlisted field " +
                             name);
        out[disc] = name;
    }
    return out;
}

TestsetSplit build_testset(const std::vector<std::string>& dataset_lines, int per_discipline,
                           uint64_t seed) {
    if (dataset_lines.empty()) throw EmptyDataset("testset over an empty dataset");
    if (per_discipline < 1) throw ConfigError("per-discipline sample size must be >= 1");

    std::map<std::string, std::vector<size_t>> by_discipline;
    for (size_t i = 0; i < dataset_lines.size(); ++i) {
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(dataset_lines[i]);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("dataset line " + std::to_string(i + 1) + ": " + e.what());
        }
        std::string disc;
        if (rec.contains("provenance") && rec.at("provenance").contains("discipline_id"))
            disc = rec.at("provenance").at("discipline_id").get<std::string>();
        else if (rec.contains("discipline_id"))
            disc = rec.at("discipline_id").get<std::string>();
        if (disc.empty())
            throw MissingMetadata("dataset line " + std::to_string(i + 1) +
                                  " has no discipline provenance");
        by_discipline[disc].push_back(i);
    }

    TestsetSplit split;
    std::vector<char> taken(dataset_lines.size(), 0);
    for (const auto& [disc, members] : by_discipline) {
        const auto want = static_cast<size_t>(per_discipline);
        if (members.size() <= want) {
            for (size_t idx : members) taken[idx] = 1;
            if (members.size() < want) ++split.shortfall_disciplines;
            continue;
        }
        Rng rng(derive_seed(seed, "testset/" + disc));
        for (size_t local : rng.sample_indices(members.size(), want)) taken[members[local]] = 1;
    }
    for (size_t i = 0; i < taken.size(); ++i)
        (taken[i] ? split.test_indices : split.train_indices).push_back(i);
    return split;
}

}  // namespace curricula
