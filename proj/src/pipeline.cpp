#include "curricula/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "curricula/decontam.hpp"
#include "curricula/errors.hpp"
#include "curricula/http_backend.hpp"
#include "curricula/instructions.hpp"
#include "curricula/jsonl.hpp"
#include "curricula/mock_backend.hpp"
#include "curricula/sampler.hpp"
#include "curricula/subjects.hpp"
#include "curricula/syllabus.hpp"
#include "curricula/text.hpp"

namespace curricula {

namespace {

std::string shard_name(size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "dataset-%05zu.jsonl", index);
    return buf;
}

bool is_shard_name(const std::string& name) {
    if (name.size() != std::string("dataset-00000.jsonl").size()) return false;
    if (name.rfind("dataset-", 0) != 0 || !name.ends_with(".jsonl")) return false;
    for (size_t i = 8; i < 13; ++i)
        if (!std::isdigit(static_cast<unsigned char>(name[i]))) return false;
    return true;
}

}  // namespace

std::filesystem::path RunPaths::stage_file(const std::string& stage) const {
    if (stage == "subjects") return subjects;
    if (stage == "syllabi") return syllabi;
    if (stage == "selections") return selections;
    if (stage == "pairs") return pairs;
    throw ConfigError("stage has no line-oriented output file: " + stage);
}

std::filesystem::path RunPaths::shard(size_t index) const { return out_dir / shard_name(index); }

RunPaths run_paths(const PipelineConfig& cfg) {
    RunPaths p;
    p.out_dir = cfg.out_dir;
    p.manifest = cfg.out_dir / "manifest.json";
    p.subjects = cfg.out_dir / "subjects.jsonl";
    p.syllabi = cfg.out_dir / "syllabi.jsonl";
    p.selections = cfg.out_dir / "selections.jsonl";
    p.pairs = cfg.out_dir / "pairs.jsonl";
    p.removed = cfg.out_dir / "removed.jsonl";
    p.decontam_report = cfg.out_dir / "decontam_report.json";
    p.dataset_manifest = cfg.out_dir / "dataset_manifest.json";
    return p;
}

std::shared_ptr<CompletionBackend> make_backend(const PipelineConfig& cfg) {
    if (cfg.backend == BackendKind::mock) return std::make_shared<MockBackend>(cfg.seed);
    return std::make_shared<HttpBackend>(cfg.http);
}

Pipeline::Pipeline(PipelineConfig cfg, std::shared_ptr<CompletionBackend> backend)
    : cfg_(std::move(cfg)),
      paths_(run_paths(cfg_)),
      gateway_(std::move(backend), cfg_.gateway) {}

Taxonomy Pipeline::load_finalized_taxonomy() const {
    if (!std::filesystem::exists(cfg_.taxonomy_path))
        throw ConfigError("taxonomy file not found: " + cfg_.taxonomy_path.string());
    // finalize() re-checks the structural invariants and that at least one
    // discipline exists, whatever the serialized status says.
    return finalize(load_taxonomy(cfg_.taxonomy_path));
}

RunManifest Pipeline::open_run(bool must_exist, bool fresh) {
    const std::string digest = config_digest(cfg_);
    std::filesystem::create_directories(paths_.out_dir);

    auto remove_outputs = [&] {
        std::vector<std::filesystem::path> files = {paths_.manifest,        paths_.subjects,
                                                    paths_.syllabi,         paths_.selections,
                                                    paths_.pairs,           paths_.removed,
                                                    paths_.decontam_report, paths_.dataset_manifest};
        for (const auto& entry : std::filesystem::directory_iterator(paths_.out_dir))
            if (entry.is_regular_file() && is_shard_name(entry.path().filename().string()))
                files.push_back(entry.path());
        for (const auto& f : files) std::filesystem::remove(f);
    };

    if (fresh) remove_outputs();

    RunManifest m;
    if (std::filesystem::exists(paths_.manifest)) {
        m = load_manifest(paths_.manifest);
        if (m.config_digest != digest)
            throw ConfigDrift("run manifest at " + paths_.manifest.string() +
                              " was produced by a different configuration (digest " +
                              m.config_digest + ", current " + digest + ")");
    } else {
        if (must_exist)
            throw ConfigError("nothing to resume: no run manifest at " +
                              paths_.manifest.string());
        remove_outputs();  // drop stale outputs from any deleted previous run
        m = make_manifest(digest);
        save_manifest(paths_.manifest, m);
    }
    repair_outputs(m);
    return m;
}

void Pipeline::repair_outputs(RunManifest& m) {
    for (const char* name : {"subjects", "syllabi", "selections", "pairs"}) {
        const StageLedger& ledger = m.stage(name);
        const auto expected = static_cast<size_t>(ledger.total_lines());
        const auto file = paths_.stage_file(name);
        if (!std::filesystem::exists(file)) {
            if (expected > 0)
                throw IoError("ledgered output missing: " + file.string() +
                              " (start over with a fresh run)");
            continue;
        }
        const size_t actual = count_lines(file);
        if (actual > expected) {
            // Torn tail from an interrupted append; drop it.
            truncate_to_lines(file, expected);
            std::cerr << "repaired " << file.string() << ": dropped " << (actual - expected)
                      << " unledgered line(s)\n";
        } else if (actual < expected) {
            throw IoError(file.string() + " has " + std::to_string(actual) +
                          " lines but the ledger expects " + std::to_string(expected) +
                          " (start over with a fresh run)");
        }
    }
    StageLedger& decontam = m.stage("decontaminate");
    if (decontam.status == StageStatus::done &&
        !std::filesystem::exists(paths_.dataset_manifest)) {
        decontam = StageLedger{};  // outputs vanished; redo the whole stage
        save_manifest(paths_.manifest, m);
    }
}

void Pipeline::require_done(const RunManifest& m, const std::string& stage) const {
    if (m.stage(stage).status != StageStatus::done)
        throw ConfigError("stage \"" + stage + "\" is not complete; run it (or run-all) first");
}

void Pipeline::execute_stage(RunManifest& m, const std::string& name, std::vector<PlanItem> plan,
                             size_t parallelism) {
    StageLedger& ledger = m.stage(name);

    std::vector<PlanItem> pending;
    size_t failed_in_plan = 0;
    for (auto& item : plan) {
        if (ledger.has(item.id)) {
            if (std::find(ledger.failed.begin(), ledger.failed.end(), item.id) !=
                ledger.failed.end())
                ++failed_in_plan;
            continue;
        }
        pending.push_back(std::move(item));
    }

    const auto file = paths_.stage_file(name);
    std::ofstream out(file, std::ios::binary | std::ios::app);
    if (!out) throw IoError("cannot open " + file.string() + " for append");

    size_t done_now = 0;
    if (parallelism < 1) parallelism = 1;
    for (size_t base = 0; base < pending.size(); base += parallelism) {
        const size_t chunk = std::min(parallelism, pending.size() - base);
        std::vector<std::future<std::vector<std::string>>> futures;
        futures.reserve(chunk);
        for (size_t k = 0; k < chunk; ++k)
            futures.push_back(std::async(std::launch::async, pending[base + k].produce));
        for (size_t k = 0; k < chunk; ++k) {
            const std::string& id = pending[base + k].id;
            try {
                std::vector<std::string> lines = futures[k].get();
                for (const auto& line : lines) out << line << '\n';
                out.flush();
                if (!out) throw IoError("short write to " + file.string());
                ledger.items.emplace_back(id, static_cast<long>(lines.size()));
                ++done_now;
            } catch (const std::exception& e) {
                std::cerr << "stage " << name << ": item " << id << " failed: " << e.what()
                          << "\n";
                ledger.failed.push_back(id);
                ++failed_in_plan;
            }
            save_manifest(paths_.manifest, m);
        }
    }

    if (!plan.empty()) {
        const double rate = static_cast<double>(failed_in_plan) / static_cast<double>(plan.size());
        if (rate > cfg_.failure_threshold)
            throw StageFailure("stage \"" + name + "\" failed " +
                               std::to_string(failed_in_plan) + " of " +
                               std::to_string(plan.size()) + " items, above the threshold");
    }
    if (ledger.status != StageStatus::done) {
        ledger.status = StageStatus::done;
        save_manifest(paths_.manifest, m);
    }
    std::cerr << "stage " << name << ": " << plan.size() << " item(s), " << done_now
              << " generated, " << (plan.size() - done_now - failed_in_plan) << " cached, "
              << failed_in_plan << " failed\n";
}

std::vector<Pipeline::PlanItem> Pipeline::plan_subjects() {
    const Taxonomy taxonomy = load_finalized_taxonomy();
    std::vector<PlanItem> plan;
    for (const DisciplineRef& d : leaf_disciplines(taxonomy)) {
        plan.push_back(
            {d.id, [this, d] {
                 std::vector<Subject> subjects = generate_subjects(
                     gateway_, d, cfg_.n_queries, cfg_.stages.subjects, cfg_.stages.conversion);
                 std::vector<std::string> lines;
                 lines.reserve(subjects.size());
                 for (const Subject& s : subjects) lines.push_back(subject_to_json(s).dump());
                 return lines;
             }});
    }
    return plan;
}

std::vector<Pipeline::PlanItem> Pipeline::plan_syllabi(const RunManifest& m) {
    require_done(m, "subjects");
    const Taxonomy taxonomy = load_finalized_taxonomy();
    std::map<std::string, DisciplineRef> by_id;
    for (DisciplineRef& d : leaf_disciplines(taxonomy)) by_id[d.id] = d;

    std::vector<PlanItem> plan;
    std::map<std::string, int> used_ids;
    for (const nlohmann::json& record : read_jsonl(paths_.subjects)) {
        const Subject subject = subject_from_json(record);
        std::string base = subject.discipline_id + "/" + slugify(subject.name);
        int& n = used_ids[base];
        ++n;
        const std::string syllabus_id = n == 1 ? base : base + "-" + std::to_string(n);

        DisciplineRef d;
        if (auto it = by_id.find(subject.discipline_id); it != by_id.end())
            d = it->second;
        else
            d = DisciplineRef{subject.discipline_id, subject.discipline_id, {}};

        plan.push_back(
            {syllabus_id, [this, subject, d, syllabus_id] {
                 const std::string raw = generate_syllabus_text(
                     gateway_, subject, d, cfg_.stages.syllabus, "syllabus/" + syllabus_id);
                 Syllabus sy;
                 sy.id = syllabus_id;
                 sy.subject_ref = {subject.discipline_id, subject.name, subject.level};
                 sy.raw_text = raw;
                 sy.introduction = extract_introduction(raw);
                 sy.sessions =
                     extract_class_details(gateway_, subject, d, raw, cfg_.stages.class_details,
                                           "class_details/" + syllabus_id);
                 return std::vector<std::string>{syllabus_to_json(sy).dump()};
             }});
    }
    return plan;
}

std::vector<Pipeline::PlanItem> Pipeline::plan_selections(const RunManifest& m) {
    require_done(m, "syllabi");
    auto remaining = std::make_shared<long>(static_cast<long>(cfg_.max_pairs_total) -
                                            m.stage("selections").total_lines());
    std::vector<PlanItem> plan;
    for (const nlohmann::json& record : read_jsonl(paths_.syllabi)) {
        auto sy = std::make_shared<Syllabus>(syllabus_from_json(record));
        plan.push_back(
            {sy->id, [this, sy, remaining] {
                 // Budget is consumed in plan order; this stage runs with
                 // parallelism 1 so the arithmetic is order-deterministic.
                 const long quota =
                     std::min<long>(cfg_.questions_per_syllabus, std::max<long>(*remaining, 0));
                 std::vector<std::string> lines;
                 if (quota == 0) return lines;
                 Rng rng(derive_seed(cfg_.seed, "selections/" + sy->id));
                 std::vector<ConceptSelection> sels =
                     sample_batch(*sy, static_cast<uint64_t>(quota), cfg_.dual_fraction, rng);
                 *remaining -= static_cast<long>(sels.size());
                 lines.reserve(sels.size());
                 for (const ConceptSelection& sel : sels)
                     lines.push_back(selection_to_json(sel).dump());
                 return lines;
             }});
    }
    return plan;
}

std::vector<Pipeline::PlanItem> Pipeline::plan_pairs(const RunManifest& m) {
    require_done(m, "selections");
    auto syllabi = std::make_shared<std::map<std::string, Syllabus>>();
    for (const nlohmann::json& record : read_jsonl(paths_.syllabi)) {
        Syllabus sy = syllabus_from_json(record);
        (*syllabi)[sy.id] = std::move(sy);
    }

    std::vector<PlanItem> plan;
    for (const nlohmann::json& record : read_jsonl(paths_.selections)) {
        auto sel = std::make_shared<ConceptSelection>(selection_from_json(record));
        const std::string pair_id = sel->syllabus_ref + "#" + sel->canonical_key;
        plan.push_back(
            {pair_id, [this, sel, syllabi, pair_id] {
                 auto it = syllabi->find(sel->syllabus_ref);
                 if (it == syllabi->end())
                     throw SelectionMismatch("selection references unknown syllabus " +
                                             sel->syllabus_ref);
                 const Syllabus& sy = it->second;

                 InstructionPair p;
                 p.id = pair_id;
                 p.question = generate_question(gateway_, sy, *sel, cfg_.stages.question,
                                                "q/" + pair_id);
                 p.answer =
                     generate_answer(gateway_, p.question, cfg_.stages.answer, "a/" + pair_id);
                 p.discipline_id = sy.subject_ref.discipline_id;
                 p.subject_name = sy.subject_ref.name;
                 p.level = sy.subject_ref.level;
                 p.selection = *sel;
                 for (int idx : sel->session_indices) {
                     auto session = std::find_if(sy.sessions.begin(), sy.sessions.end(),
                                                 [&](const ClassSession& s) {
                                                     return s.index == idx;
                                                 });
                     if (session == sy.sessions.end())
                         throw SelectionMismatch("selection references missing session " +
                                                 std::to_string(idx));
                     p.session_names.push_back(session->name);
                 }
                 p.question_model = cfg_.stages.question.model;
                 p.answer_model = cfg_.stages.answer.model;
                 p.question_sampling = cfg_.stages.question.sampling;
                 p.answer_sampling = cfg_.stages.answer.sampling;
                 p.run_seed = cfg_.seed;
                 return std::vector<std::string>{pair_to_json(p).dump()};
             }});
    }
    return plan;
}

void Pipeline::run_decontaminate(RunManifest& m) {
    require_done(m, "pairs");
    StageLedger& ledger = m.stage("decontaminate");
    if (ledger.status == StageStatus::done) {
        // The cut is current only if the pairs file has not grown since (a
        // resumed run with an extended taxonomy appends new pairs). The
        // dataset manifest records kept + removed = lines processed.
        long processed = -1;
        try {
            const nlohmann::json dm = nlohmann::json::parse(read_file(paths_.dataset_manifest));
            processed = dm.at("total_pairs").get<long>() + dm.at("removed").get<long>();
        } catch (const std::exception&) {
            processed = -1;
        }
        if (processed == m.stage("pairs").total_lines()) {
            std::cerr << "stage decontaminate: cached\n";
            return;
        }
        ledger = StageLedger{};
    }

    std::vector<BenchmarkCorpus> corpora;
    for (const CorpusSpec& spec : cfg_.corpora)
        corpora.push_back(
            load_corpus(spec.path, spec.name, spec.split, spec.format, spec.prompt_field));

    std::ifstream in(paths_.pairs, std::ios::binary);
    if (!in) throw IoError("cannot open " + paths_.pairs.string());
    std::ostringstream kept, removed;
    RemovalReport report;
    if (corpora.empty()) {
        // Nothing to decontaminate against: every pair is kept verbatim.
        std::string line;
        while (std::getline(in, line)) {
            kept << line << '\n';
            ++report.input;
        }
        report.kept = report.input;
    } else {
        DecontamIndex index(corpora, cfg_.ngram);
        report = filter_pairs(in, kept, &removed, index);
    }

    // Shard the kept lines.
    const std::string kept_data = kept.str();
    std::vector<std::pair<std::string, size_t>> shards;  // (file name, lines)
    {
        std::istringstream stream(kept_data);
        std::string line, shard_data;
        size_t lines_in_shard = 0;
        auto flush_shard = [&] {
            if (lines_in_shard == 0) return;
            const std::string name = shard_name(shards.size());
            write_file_atomic(paths_.out_dir / name, shard_data);
            shards.emplace_back(name, lines_in_shard);
            shard_data.clear();
            lines_in_shard = 0;
        };
        while (std::getline(stream, line)) {
            shard_data += line;
            shard_data += '\n';
            if (++lines_in_shard == static_cast<size_t>(cfg_.shard_max_lines)) flush_shard();
        }
        flush_shard();
    }
    // Drop stale shards beyond the new count.
    for (const auto& entry : std::filesystem::directory_iterator(paths_.out_dir)) {
        const std::string name = entry.path().filename().string();
        if (entry.is_regular_file() && is_shard_name(name)) {
            const size_t index = std::stoul(name.substr(8, 5));
            if (index >= shards.size()) std::filesystem::remove(entry.path());
        }
    }

    write_file_atomic(paths_.removed, removed.str());

    nlohmann::json report_json = report.to_json();
    report_json["ngram"] = cfg_.ngram;
    nlohmann::json corpora_json = nlohmann::json::array();
    for (const BenchmarkCorpus& c : corpora)
        corpora_json.push_back(
            {{"name", c.name}, {"split", split_name(c.split)}, {"prompts", c.prompts.size()}});
    report_json["corpora"] = corpora_json;
    write_file_atomic(paths_.decontam_report, report_json.dump(2) + "\n");

    nlohmann::json shards_json = nlohmann::json::array();
    for (const auto& [name, lines] : shards)
        shards_json.push_back({{"file", name}, {"lines", lines}});
    nlohmann::json dataset_manifest = {{"run_id", m.run_id},
                                       {"total_pairs", report.kept},
                                       {"removed", report.removed},
                                       {"shards", shards_json}};
    write_file_atomic(paths_.dataset_manifest, dataset_manifest.dump(2) + "\n");

    ledger.items = {{"all", static_cast<long>(report.kept)}};
    ledger.failed.clear();
    ledger.status = StageStatus::done;
    save_manifest(paths_.manifest, m);
    std::cerr << "stage decontaminate: " << report.input << " in, " << report.kept << " kept, "
              << report.removed << " removed\n";
}

void Pipeline::run_stage(RunManifest& m, const std::string& name) {
    const auto parallelism = static_cast<size_t>(cfg_.gateway.max_in_flight);
    if (name == "subjects")
        execute_stage(m, name, plan_subjects(), parallelism);
    else if (name == "syllabi")
        execute_stage(m, name, plan_syllabi(m), parallelism);
    else if (name == "selections")
        execute_stage(m, name, plan_selections(m), 1);
    else if (name == "pairs")
        execute_stage(m, name, plan_pairs(m), parallelism);
    else if (name == "decontaminate")
        run_decontaminate(m);
    else
        throw ConfigError("unknown pipeline stage: " + name);
}

RunManifest Pipeline::run_all(bool fresh) {
    RunManifest m = open_run(/*must_exist=*/false, fresh);
    for (const char* name : kStageNames) run_stage(m, name);
    return m;
}

RunManifest Pipeline::resume() {
    RunManifest m = open_run(/*must_exist=*/true, /*fresh=*/false);
    for (const char* name : kStageNames) run_stage(m, name);
    return m;
}

RunManifest Pipeline::run_stages(const std::vector<std::string>& stage_names) {
    RunManifest m = open_run(/*must_exist=*/false, /*fresh=*/false);
    for (const std::string& name : stage_names) run_stage(m, name);
    return m;
}

}  // namespace curricula
