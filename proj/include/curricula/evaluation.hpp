#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "curricula/subjects.hpp"

namespace curricula {

enum class VerdictOrder { ab, ba };

/// One judge call. score_a / score_b are the scores of presentation slots A
/// and B as written by the judge; `order` records which model sat in slot A
/// (ab: model_a, ba: model_b). Scores are 1..10 when valid.
struct JudgeVerdict {
    std::string instruction_id;
    std::string model_a;
    std::string model_b;
    VerdictOrder order = VerdictOrder::ab;
    int score_a = 0;
    int score_b = 0;
    std::string raw_judge_text;
    bool valid = false;
};

/// Bidirectional aggregate for one instruction: per-model score averaged over
/// both presentation orders, plus optional grouping metadata.
struct PairwiseResult {
    std::string instruction_id;
    std::map<std::string, double> avg_score;
    std::optional<int> difficulty;  // 1..10 when supplied
    std::string discipline_id;
};

struct LossGapReport {
    std::string benchmark;
    double l_test = 0;
    double l_train = 0;
    double delta = 0;      // l_test - l_train
    double delta_pct = 0;  // delta / l_test, in percentage points (unrounded)
};

struct JudgeStats {
    int unparsed_completions = 0;  // completions that failed parsing (before retry)
    int invalid_comparisons = 0;   // comparisons excluded after the retry
};

/// Extracts the two slot scores from judge text: "Score A:" / "Score B:"
/// lines first, else the first two integers anywhere. Scores outside 1..10
/// count as unparseable.
std::optional<std::pair<int, int>> parse_judge_scores(const std::string& text);

/// Two judge calls with the response order swapped; each completion parsed
/// for two slot scores; unparseable completions retried once, after which the
/// verdict is marked invalid. Both responses must be non-empty.
std::pair<JudgeVerdict, JudgeVerdict> judge_bidirectional(
    Gateway& gateway, const std::string& instruction_id, const std::string& instruction,
    const std::string& model_a, const std::string& response_a, const std::string& model_b,
    const std::string& response_b, const StageParams& params, const std::string& request_prefix,
    JudgeStats* stats = nullptr);

/// Averages a verdict pair into a PairwiseResult; empty when either verdict
/// is invalid (invalid comparisons are excluded, not imputed).
std::optional<PairwiseResult> aggregate_verdicts(const JudgeVerdict& ab, const JudgeVerdict& ba);

/// Mean subject avg-score minus mean baseline avg-score over all results.
/// NoValidResults when empty; MissingMetadata if a result lacks either model.
double score_gap(const std::vector<PairwiseResult>& results, const std::string& subject_model,
                 const std::string& baseline_model);

enum class Grouping { difficulty_level, easy_hard, discipline, field };

Grouping grouping_from_name(const std::string& name);

struct GroupRow {
    std::string group;
    double ratio = 0;  // share of instructions, as a fraction of 1
    double gap = 0;
    size_t count = 0;
};

/// Per-group score gaps with group ratios. easy_hard buckets difficulty 1-5
/// vs 6-10; field grouping maps discipline ids through `field_map` (strict:
/// an unmapped discipline raises MissingMetadata, as does absent metadata
/// under any grouping).
std::vector<GroupRow> group_report(const std::vector<PairwiseResult>& results, Grouping grouping,
                                   const std::map<std::string, std::string>& field_map,
                                   const std::string& subject_model,
                                   const std::string& baseline_model);

/// Ratio-weighted overall gap: sum of ratio * gap over rows.
double ratio_weighted_overall(const std::vector<GroupRow>& rows);

LossGapReport loss_gap(const std::string& benchmark, double l_test, double l_train);

/// Fixed-point table row with the percentage rounded to 2 decimals.
std::string format_loss_gap(const LossGapReport& report);

nlohmann::json verdict_to_json(const JudgeVerdict& v);
JudgeVerdict verdict_from_json(const nlohmann::json& j);

/// Model responses keyed by instruction id, as ingested from JSON Lines
/// records {"instruction_id","model","response"}. Every record in one file
/// must name the same model.
struct ResponseSet {
    std::string model;
    std::map<std::string, std::string> by_instruction;
};

ResponseSet load_responses(const std::filesystem::path& path);

/// Discipline -> field mapping file: a JSON object {"fields": [...],
/// "map": {discipline_id: field}}; every mapped field must be listed.
std::map<std::string, std::string> load_field_map(const std::filesystem::path& path);

struct TestsetSplit {
    std::vector<size_t> test_indices;   // sorted positions into the input
    std::vector<size_t> train_indices;  // complement, sorted
    int shortfall_disciplines = 0;      // disciplines with fewer pairs than requested
};

/// Samples per_discipline instructions uniformly without replacement per
/// discipline (all of them, with a warning tally, when fewer exist). Each
/// line must be a JSON object carrying discipline provenance (either
/// provenance.discipline_id or a top-level discipline_id). EmptyDataset on
/// empty input. Deterministic in `seed`.
TestsetSplit build_testset(const std::vector<std::string>& dataset_lines, int per_discipline,
                           uint64_t seed);

}  // namespace curricula
