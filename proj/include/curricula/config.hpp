#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "curricula/decontam.hpp"
#include "curricula/gateway.hpp"
#include "curricula/http_backend.hpp"
#include "curricula/subjects.hpp"

namespace curricula {

enum class BackendKind { mock, real };

BackendKind backend_from_name(const std::string& name);
const char* backend_name(BackendKind k);

struct CorpusSpec {
    std::string name;
    Split split = Split::train;
    std::filesystem::path path;
    std::string format = "text";  // "text" | "jsonl"
    std::string prompt_field = "prompt";
};

/// Model + sampling parameters for every completion-issuing stage.
struct StageTable {
    StageParams taxonomy;
    StageParams subjects;
    StageParams conversion;
    StageParams syllabus;
    StageParams class_details;
    StageParams question;
    StageParams answer;
    StageParams judge;
};

/// Full pipeline configuration, loaded from a JSON file with strict key
/// checking (unknown keys are configuration errors). The API key never
/// appears here; only the name of the environment variable that holds it.
struct PipelineConfig {
    // run
    uint64_t seed = 0;
    BackendKind backend = BackendKind::mock;
    std::filesystem::path out_dir = "out";

    GatewayLimits gateway;
    HttpBackendOptions http;
    StageTable stages;

    // generation
    int n_queries = 10;
    int questions_per_syllabus = 10;
    double dual_fraction = 0.5;
    int max_pairs_total = 1000;
    double failure_threshold = 0.05;
    int shard_max_lines = 5000;

    // decontamination
    int ngram = 10;
    std::vector<CorpusSpec> corpora;

    // evaluation
    int per_discipline = 50;

    // paths (inputs)
    std::filesystem::path taxonomy_path = "taxonomy.json";
    std::filesystem::path field_map_path;
};

/// Built-in defaults; equivalent to loading an empty JSON object.
PipelineConfig default_config();

/// Parses and validates a config file. Rejects unknown keys, non-positive
/// budgets, dual_fraction or failure_threshold outside [0,1], and top_p
/// outside (0,1].
PipelineConfig load_config(const std::filesystem::path& path);

PipelineConfig config_from_json(const nlohmann::json& j);

/// Hash of the behavior-relevant configuration: everything except out_dir
/// and the input-path entries. Input locations (and their contents) are
/// deliberately outside the digest: stage plans are recomputed from the
/// current inputs on every open, so extending the taxonomy and resuming
/// executes only the new items instead of invalidating the run. Runs that
/// differ only in where they read/write produce the same digest.
std::string config_digest(const PipelineConfig& cfg);

/// Canonical JSON rendering used by config_digest (keys sorted, no paths).
nlohmann::json canonical_config_json(const PipelineConfig& cfg);

}  // namespace curricula
