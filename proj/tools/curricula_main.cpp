// Command-line driver for the curricula data pipeline.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "curricula/config.hpp"
#include "curricula/decontam.hpp"
#include "curricula/errors.hpp"
#include "curricula/evaluation.hpp"
#include "curricula/jsonl.hpp"
#include "curricula/manifest.hpp"
#include "curricula/pipeline.hpp"
#include "curricula/prompts.hpp"
#include "curricula/taxonomy.hpp"

namespace fs = std::filesystem;
using namespace curricula;

namespace {

std::vector<std::string> read_lines(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

void write_lines(const fs::path& path, const std::vector<std::string>& lines,
                 const std::vector<size_t>& indices) {
    std::string data;
    for (size_t i : indices) {
        data += lines[i];
        data += '\n';
    }
    write_file_atomic(path, data);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"curricula: taxonomy-driven synthetic instruction data pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    uint64_t seed = 0;
    std::string backend_name_arg;
    std::string out_dir_arg;
    auto* opt_config = app.add_option("--config", config_path, "JSON configuration file");
    auto* opt_seed = app.add_option("--seed", seed, "Override the run seed");
    auto* opt_backend = app.add_option("--backend", backend_name_arg, "Override the backend")
                            ->check(CLI::IsMember({"real", "mock"}));
    auto* opt_out = app.add_option("--out", out_dir_arg, "Override the output directory");

    auto load_cfg = [&]() {
        PipelineConfig cfg =
            opt_config->count() ? load_config(config_path) : default_config();
        if (opt_seed->count()) cfg.seed = seed;
        if (opt_backend->count()) cfg.backend = backend_from_name(backend_name_arg);
        if (opt_out->count()) cfg.out_dir = out_dir_arg;
        return cfg;
    };

    // ---- taxonomy draft | vote | finalize -------------------------------
    auto* tax = app.add_subcommand("taxonomy", "Build and curate the knowledge taxonomy");
    tax->require_subcommand(1);
    tax->fallthrough();

    auto* tax_draft =
        tax->add_subcommand("draft", "Query the model with several phrasings and merge");
    tax_draft->fallthrough();
    std::vector<std::string> extra_prompt_files;
    tax_draft->add_option("--prompt-file", extra_prompt_files,
                          "Extra prompt file(s), one prompt per file");
    tax_draft->callback([&] {
        PipelineConfig cfg = load_cfg();
        Pipeline pipeline(cfg, make_backend(cfg));
        std::vector<std::string> prompt_set = prompts::taxonomy_draft_prompts();
        for (const auto& f : extra_prompt_files) prompt_set.push_back(read_file(f));
        Taxonomy draft = draft_taxonomy(pipeline.gateway(), prompt_set,
                                        cfg.stages.taxonomy.sampling, cfg.stages.taxonomy.model);
        fs::create_directories(cfg.out_dir);
        write_file_atomic(cfg.out_dir / "taxonomy_draft.txt", format_outline(draft));
        write_file_atomic(cfg.out_dir / "taxonomy_draft.json",
                          taxonomy_to_json(draft).dump(2) + "\n");
        std::cout << "drafted " << leaf_disciplines(draft).size() << " disciplines -> "
                  << (cfg.out_dir / "taxonomy_draft.json").string() << " (and .txt)\n";
    });

    auto* tax_vote = tax->add_subcommand("vote", "Apply annotator vote sheets to a draft");
    tax_vote->fallthrough();
    std::string vote_draft_path;
    std::vector<std::string> vote_sheet_paths;
    std::string vote_out_path;
    tax_vote->add_option("--draft", vote_draft_path, "Draft taxonomy (.json or outline)");
    tax_vote->add_option("--votes", vote_sheet_paths, "Vote sheet JSON Lines file(s)")
        ->required();
    tax_vote->add_option("-o,--output", vote_out_path, "Output path");
    tax_vote->callback([&] {
        PipelineConfig cfg = load_cfg();
        const fs::path draft_path = vote_draft_path.empty() ? cfg.out_dir / "taxonomy_draft.json"
                                                            : fs::path(vote_draft_path);
        Taxonomy draft = load_taxonomy(draft_path);
        std::vector<VoteSheet> sheets;
        for (const auto& f : vote_sheet_paths)
            for (auto& sheet : load_vote_sheets(f)) sheets.push_back(std::move(sheet));
        Taxonomy voted = apply_votes(draft, sheets);
        const fs::path out =
            vote_out_path.empty() ? fs::path(cfg.taxonomy_path) : fs::path(vote_out_path);
        if (out.has_parent_path()) fs::create_directories(out.parent_path());
        write_file_atomic(out, taxonomy_to_json(voted).dump(2) + "\n");
        std::cout << "voted: " << leaf_disciplines(voted).size()
                  << " disciplines survive -> " << out.string() << "\n";
    });

    auto* tax_final =
        tax->add_subcommand("finalize", "Validate a taxonomy and mark it finalized");
    tax_final->fallthrough();
    std::string final_in_path;
    std::string final_out_path;
    tax_final->add_option("--in", final_in_path, "Input taxonomy (.json or outline)");
    tax_final->add_option("-o,--output", final_out_path, "Output path");
    tax_final->callback([&] {
        PipelineConfig cfg = load_cfg();
        const fs::path in =
            final_in_path.empty() ? cfg.out_dir / "taxonomy_draft.json" : fs::path(final_in_path);
        Taxonomy t = finalize(load_taxonomy(in));
        const fs::path out =
            final_out_path.empty() ? fs::path(cfg.taxonomy_path) : fs::path(final_out_path);
        if (out.has_parent_path()) fs::create_directories(out.parent_path());
        write_file_atomic(out, taxonomy_to_json(t).dump(2) + "\n");
        std::cout << "finalized " << leaf_disciplines(t).size() << " disciplines -> "
                  << out.string() << "\n";
    });

    // ---- pipeline stages ------------------------------------------------
    auto add_stage_command = [&](const char* name, const char* help,
                                 std::vector<std::string> stages) {
        auto* sub = app.add_subcommand(name, help);
        sub->fallthrough();
        sub->callback([&, stages] {
            PipelineConfig cfg = load_cfg();
            Pipeline pipeline(cfg, make_backend(cfg));
            pipeline.run_stages(stages);
        });
        return sub;
    };
    add_stage_command("subjects", "Generate the subject list for every discipline",
                      {"subjects"});
    add_stage_command("syllabi", "Generate a syllabus for every subject", {"syllabi"});
    add_stage_command("generate", "Sample concept selections and generate question-answer pairs",
                      {"selections", "pairs"});

    auto* decon_cmd = app.add_subcommand(
        "decontaminate", "Filter pairs against benchmark corpora and shard the dataset");
    decon_cmd->fallthrough();
    bool decon_force = false;
    decon_cmd->add_flag("--force", decon_force,
                        "Re-cut the dataset even if it is current (use after editing a corpus)");
    decon_cmd->callback([&] {
        PipelineConfig cfg = load_cfg();
        if (decon_force) {
            const RunPaths paths = run_paths(cfg);
            if (fs::exists(paths.manifest)) {
                RunManifest m = load_manifest(paths.manifest);
                m.stage("decontaminate") = StageLedger{};
                save_manifest(paths.manifest, m);
            }
        }
        Pipeline pipeline(cfg, make_backend(cfg));
        pipeline.run_stages({"decontaminate"});
    });

    auto* run_all_cmd = app.add_subcommand("run-all", "Execute every stage in order");
    run_all_cmd->fallthrough();
    bool fresh = false;
    run_all_cmd->add_flag("--fresh", fresh, "Discard previous outputs first");
    run_all_cmd->callback([&] {
        PipelineConfig cfg = load_cfg();
        Pipeline pipeline(cfg, make_backend(cfg));
        pipeline.run_all(fresh);
    });

    auto* resume_cmd = app.add_subcommand("resume", "Complete the pending work of a run");
    resume_cmd->fallthrough();
    resume_cmd->callback([&] {
        PipelineConfig cfg = load_cfg();
        Pipeline pipeline(cfg, make_backend(cfg));
        pipeline.resume();
    });

    // ---- testset --------------------------------------------------------
    auto* testset_cmd =
        app.add_subcommand("testset", "Hold out a per-discipline sample of the dataset");
    testset_cmd->fallthrough();
    int per_discipline_arg = 0;
    std::vector<std::string> dataset_files;
    testset_cmd->add_option("--per-discipline", per_discipline_arg,
                            "Instructions to hold out per discipline");
    testset_cmd->add_option("--dataset", dataset_files,
                            "Dataset shard(s); default: the run's dataset manifest");
    testset_cmd->callback([&] {
        PipelineConfig cfg = load_cfg();
        const RunPaths paths = run_paths(cfg);
        std::vector<fs::path> files;
        if (dataset_files.empty()) {
            const auto manifest = nlohmann::json::parse(read_file(paths.dataset_manifest));
            for (const auto& shard : manifest.at("shards"))
                files.push_back(cfg.out_dir / shard.at("file").get<std::string>());
        } else {
            files.assign(dataset_files.begin(), dataset_files.end());
        }
        std::vector<std::string> lines;
        for (const auto& f : files)
            for (auto& line : read_lines(f))
                if (!line.empty()) lines.push_back(std::move(line));
        const int per = per_discipline_arg > 0 ? per_discipline_arg : cfg.per_discipline;
        const TestsetSplit split = build_testset(lines, per, cfg.seed);
        fs::create_directories(cfg.out_dir);
        write_lines(cfg.out_dir / "testset.jsonl", lines, split.test_indices);
        write_lines(cfg.out_dir / "train.jsonl", lines, split.train_indices);
        nlohmann::json ids = nlohmann::json::array();
        for (size_t i : split.test_indices) {
            const auto rec = nlohmann::json::parse(lines[i]);
            if (rec.contains("id")) ids.push_back(rec.at("id"));
        }
        write_file_atomic(cfg.out_dir / "holdout_ids.json", ids.dump(2) + "\n");
        std::cout << "testset: " << split.test_indices.size() << " held out, "
                  << split.train_indices.size() << " train";
        if (split.shortfall_disciplines > 0)
            std::cout << " (warning: " << split.shortfall_disciplines
                      << " discipline(s) had fewer than " << per << " pairs)";
        std::cout << "\n";
    });

    // ---- judge ----------------------------------------------------------
    auto* judge_cmd =
        app.add_subcommand("judge", "Pairwise-judge two models' responses, both orders");
    judge_cmd->fallthrough();
    std::string instructions_path, responses_a_path, responses_b_path, verdicts_out_path;
    judge_cmd->add_option("--instructions", instructions_path, "Instruction JSON Lines file")
        ->required();
    judge_cmd->add_option("--responses-a", responses_a_path, "First model's responses")
        ->required();
    judge_cmd->add_option("--responses-b", responses_b_path, "Second model's responses")
        ->required();
    judge_cmd->add_option("-o,--output", verdicts_out_path, "Verdicts output path");
    judge_cmd->callback([&] {
        PipelineConfig cfg = load_cfg();
        Pipeline pipeline(cfg, make_backend(cfg));
        const ResponseSet a = load_responses(responses_a_path);
        const ResponseSet b = load_responses(responses_b_path);
        JudgeStats stats;
        size_t judged = 0, skipped = 0;
        std::string out_data;
        for (const auto& rec : read_jsonl(instructions_path)) {
            std::string id;
            if (rec.contains("id"))
                id = rec.at("id").get<std::string>();
            else if (rec.contains("instruction_id"))
                id = rec.at("instruction_id").get<std::string>();
            else
                throw ParseError("instruction record lacks id / instruction_id");
            std::string question;
            if (rec.contains("question"))
                question = rec.at("question").get<std::string>();
            else if (rec.contains("instruction"))
                question = rec.at("instruction").get<std::string>();
            else
                throw ParseError("instruction record lacks question / instruction");
            auto ra = a.by_instruction.find(id);
            auto rb = b.by_instruction.find(id);
            if (ra == a.by_instruction.end() || rb == b.by_instruction.end()) {
                ++skipped;
                continue;
            }
            auto [ab, ba] =
                judge_bidirectional(pipeline.gateway(), id, question, a.model, ra->second,
                                    b.model, rb->second, cfg.stages.judge, "judge/" + id, &stats);
            out_data += verdict_to_json(ab).dump() + "\n";
            out_data += verdict_to_json(ba).dump() + "\n";
            ++judged;
        }
        const fs::path out = verdicts_out_path.empty() ? cfg.out_dir / "verdicts.jsonl"
                                                       : fs::path(verdicts_out_path);
        if (out.has_parent_path()) fs::create_directories(out.parent_path());
        write_file_atomic(out, out_data);
        std::cout << "judged " << judged << " instruction(s) (" << skipped << " skipped, "
                  << stats.invalid_comparisons << " invalid) -> " << out.string() << "\n";
    });

    // ---- report ---------------------------------------------------------
    auto* report_cmd = app.add_subcommand("report", "Aggregate verdicts into score-gap tables");
    report_cmd->fallthrough();
    std::string verdicts_path, metadata_path, field_map_path, group_by = "overall";
    std::string subject_model, baseline_model, report_out_path;
    report_cmd->add_option("--verdicts", verdicts_path, "Verdict JSON Lines file");
    report_cmd
        ->add_option("--group-by", group_by, "overall, difficulty_level, easy_hard, discipline, field")
        ->check(CLI::IsMember({"overall", "difficulty_level", "easy_hard", "discipline", "field"}));
    report_cmd->add_option("--metadata", metadata_path,
                           "JSON Lines {instruction_id, difficulty?, discipline_id?}");
    report_cmd->add_option("--field-map", field_map_path, "Discipline-to-field mapping file");
    report_cmd->add_option("--subject", subject_model, "Model whose gap is reported");
    report_cmd->add_option("--baseline", baseline_model, "Model subtracted from the subject");
    report_cmd->add_option("-o,--output", report_out_path, "Write the report JSON here");
    report_cmd->callback([&] {
        PipelineConfig cfg = load_cfg();
        const fs::path verdicts_file =
            verdicts_path.empty() ? cfg.out_dir / "verdicts.jsonl" : fs::path(verdicts_path);

        std::map<std::string, std::pair<std::optional<JudgeVerdict>, std::optional<JudgeVerdict>>>
            by_id;
        std::vector<std::string> id_order;
        for (const auto& rec : read_jsonl(verdicts_file)) {
            JudgeVerdict v = verdict_from_json(rec);
            auto [it, inserted] = by_id.try_emplace(v.instruction_id);
            if (inserted) id_order.push_back(v.instruction_id);
            auto& slot = v.order == VerdictOrder::ab ? it->second.first : it->second.second;
            slot = std::move(v);
        }

        std::map<std::string, std::pair<std::optional<int>, std::string>> metadata;
        if (!metadata_path.empty()) {
            for (const auto& rec : read_jsonl(metadata_path)) {
                auto& entry = metadata[rec.at("instruction_id").get<std::string>()];
                if (rec.contains("difficulty")) entry.first = rec.at("difficulty").get<int>();
                if (rec.contains("discipline_id"))
                    entry.second = rec.at("discipline_id").get<std::string>();
            }
        }

        std::vector<PairwiseResult> results;
        size_t invalid = 0;
        for (const auto& id : id_order) {
            const auto& [ab, ba] = by_id.at(id);
            if (!ab || !ba) {
                ++invalid;
                continue;
            }
            auto result = aggregate_verdicts(*ab, *ba);
            if (!result) {
                ++invalid;
                continue;
            }
            if (auto it = metadata.find(id); it != metadata.end()) {
                result->difficulty = it->second.first;
                result->discipline_id = it->second.second;
            }
            results.push_back(std::move(*result));
        }
        if (results.empty())
            throw NoValidResults("no valid bidirectional comparisons in " +
                                 verdicts_file.string());

        std::string subject = subject_model, baseline = baseline_model;
        if (subject.empty()) subject = results.front().avg_score.begin()->first;
        if (baseline.empty()) {
            for (const auto& [model, _] : results.front().avg_score)
                if (model != subject) baseline = model;
        }

        nlohmann::json out_json{{"subject", subject},
                                {"baseline", baseline},
                                {"count", results.size()},
                                {"invalid", invalid}};
        if (group_by == "overall") {
            out_json["overall"] = score_gap(results, subject, baseline);
        } else {
            std::map<std::string, std::string> field_map;
            if (!field_map_path.empty())
                field_map = load_field_map(field_map_path);
            else if (!cfg.field_map_path.empty())
                field_map = load_field_map(cfg.field_map_path);
            const auto rows = group_report(results, grouping_from_name(group_by), field_map,
                                           subject, baseline);
            nlohmann::json groups = nlohmann::json::array();
            for (const auto& row : rows)
                groups.push_back({{"group", row.group},
                                  {"ratio", row.ratio},
                                  {"gap", row.gap},
                                  {"count", row.count}});
            out_json["group_by"] = group_by;
            out_json["groups"] = groups;
            out_json["overall_ratio_weighted"] = ratio_weighted_overall(rows);
        }
        const std::string text = out_json.dump(2) + "\n";
        if (report_out_path.empty()) {
            std::cout << text;
        } else {
            write_file_atomic(report_out_path, text);
            std::cout << "report -> " << report_out_path << "\n";
        }
    });

    // ---- loss-gap -------------------------------------------------------
    auto* loss_cmd =
        app.add_subcommand("loss-gap", "Test-vs-train loss deltas for memorization checks");
    loss_cmd->fallthrough();
    std::string loss_benchmark, loss_table_path, loss_out_path;
    double l_test = 0, l_train = 0;
    auto* opt_bench = loss_cmd->add_option("--benchmark", loss_benchmark, "Benchmark name");
    auto* opt_ltest = loss_cmd->add_option("--l-test", l_test, "Loss on the test split");
    auto* opt_ltrain = loss_cmd->add_option("--l-train", l_train, "Loss on the train split");
    loss_cmd->add_option("--table", loss_table_path,
                         "JSON Lines rows {benchmark, l_test, l_train, model?}");
    loss_cmd->add_option("-o,--output", loss_out_path, "Write the rows as JSON here");
    opt_bench->needs(opt_ltest)->needs(opt_ltrain);
    loss_cmd->callback([&] {
        std::vector<std::pair<std::string, LossGapReport>> rows;  // (model label, report)
        if (!loss_table_path.empty()) {
            for (const auto& rec : read_jsonl(loss_table_path)) {
                const std::string model =
                    rec.contains("model") ? rec.at("model").get<std::string>() : "";
                rows.emplace_back(model,
                                  loss_gap(rec.at("benchmark").get<std::string>(),
                                           rec.at("l_test").get<double>(),
                                           rec.at("l_train").get<double>()));
            }
        }
        if (opt_bench->count()) rows.emplace_back("", loss_gap(loss_benchmark, l_test, l_train));
        if (rows.empty())
            throw ConfigError("loss-gap needs --table or --benchmark with --l-test/--l-train");
        nlohmann::json out_json = nlohmann::json::array();
        for (const auto& [model, report] : rows) {
            if (!model.empty()) std::cout << model << "  ";
            std::cout << format_loss_gap(report) << "\n";
            nlohmann::json row{{"benchmark", report.benchmark},
                               {"l_test", report.l_test},
                               {"l_train", report.l_train},
                               {"delta", report.delta},
                               {"delta_pct", report.delta_pct}};
            if (!model.empty()) row["model"] = model;
            out_json.push_back(row);
        }
        if (!loss_out_path.empty()) write_file_atomic(loss_out_path, out_json.dump(2) + "\n");
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const ConfigDrift& e) {
        std::cerr << "configuration drift: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
