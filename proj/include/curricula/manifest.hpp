#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace curricula {

enum class StageStatus { pending, done };

/// Append-only completion ledger for one stage. `items` records successful
/// item ids with the number of output lines each appended, in append order
/// (which equals plan order); `failed` records ids that exhausted their
/// retries and contributed zero lines. A stage is done only when every
/// planned item is ledgered in one of the two lists.
struct StageLedger {
    StageStatus status = StageStatus::pending;
    std::vector<std::pair<std::string, long>> items;
    std::vector<std::string> failed;

    bool has(const std::string& id) const;
    long total_lines() const;
};

inline constexpr std::array<const char*, 5> kStageNames = {"subjects", "syllabi", "selections",
                                                           "pairs", "decontaminate"};

/// Checkpoint state of one run. Contains no timestamps or paths, so two runs
/// of the same configuration produce byte-identical manifests regardless of
/// where their outputs live. run_id equals the config digest.
struct RunManifest {
    std::string run_id;
    std::string config_digest;
    std::map<std::string, StageLedger> stages;  // keyed by kStageNames

    StageLedger& stage(const std::string& name);
    const StageLedger& stage(const std::string& name) const;
};

RunManifest make_manifest(const std::string& config_digest);

nlohmann::json manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j);

/// Atomic write (temp file + rename) of the pretty-printed JSON form.
void save_manifest(const std::filesystem::path& path, const RunManifest& m);

RunManifest load_manifest(const std::filesystem::path& path);

}  // namespace curricula
