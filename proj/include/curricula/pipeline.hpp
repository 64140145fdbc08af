#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "curricula/config.hpp"
#include "curricula/gateway.hpp"
#include "curricula/manifest.hpp"
#include "curricula/taxonomy.hpp"

namespace curricula {

/// Locations of every run artifact under out_dir.
struct RunPaths {
    std::filesystem::path out_dir;
    std::filesystem::path manifest;
    std::filesystem::path subjects;
    std::filesystem::path syllabi;
    std::filesystem::path selections;
    std::filesystem::path pairs;
    std::filesystem::path removed;
    std::filesystem::path decontam_report;
    std::filesystem::path dataset_manifest;

    /// The JSON Lines file one of the line-oriented stages appends to.
    std::filesystem::path stage_file(const std::string& stage) const;
    std::filesystem::path shard(size_t index) const;  // dataset-00000.jsonl, ...
};

RunPaths run_paths(const PipelineConfig& cfg);

/// Executes the generation pipeline stage by stage with per-item
/// checkpointing. Items are keyed by stable ids (discipline, then syllabus,
/// then selection), given derived seeds, and ledgered in the run manifest
/// after their output lines are appended, so an interrupted run resumes
/// without repeating or reordering work and — under the mock backend —
/// reproduces the uninterrupted run byte for byte.
class Pipeline {
public:
    Pipeline(PipelineConfig cfg, std::shared_ptr<CompletionBackend> backend);

    /// Creates the run if needed (with `fresh`, discards any previous outputs
    /// first) and executes all stages in order. ConfigDrift if an existing
    /// manifest was produced by a different configuration.
    RunManifest run_all(bool fresh = false);

    /// Reopens an existing run and completes pending work only. ConfigError
    /// when there is nothing to resume; ConfigDrift on digest mismatch.
    RunManifest resume();

    /// Runs the named stages in pipeline order; each stage requires its
    /// predecessor to be complete.
    RunManifest run_stages(const std::vector<std::string>& stage_names);

    Gateway& gateway() { return gateway_; }
    const RunPaths& paths() const { return paths_; }

private:
    struct PlanItem {
        std::string id;
        std::function<std::vector<std::string>()> produce;
    };

    RunManifest open_run(bool must_exist, bool fresh);
    void repair_outputs(RunManifest& m);
    void run_stage(RunManifest& m, const std::string& name);
    void execute_stage(RunManifest& m, const std::string& name, std::vector<PlanItem> plan,
                       size_t parallelism);
    void require_done(const RunManifest& m, const std::string& stage) const;

    Taxonomy load_finalized_taxonomy() const;
    std::vector<PlanItem> plan_subjects();
    std::vector<PlanItem> plan_syllabi(const RunManifest& m);
    std::vector<PlanItem> plan_selections(const RunManifest& m);
    std::vector<PlanItem> plan_pairs(const RunManifest& m);
    void run_decontaminate(RunManifest& m);

    PipelineConfig cfg_;
    RunPaths paths_;
    Gateway gateway_;
};

/// Constructs the configured backend: MockBackend(seed) or HttpBackend over
/// the config's endpoint (API key read from the configured environment
/// variable at request time).
std::shared_ptr<CompletionBackend> make_backend(const PipelineConfig& cfg);

}  // namespace curricula
