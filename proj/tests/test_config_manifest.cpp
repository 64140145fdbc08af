#include <doctest.h>

#include <nlohmann/json.hpp>

#include "curricula/config.hpp"
#include "curricula/errors.hpp"
#include "curricula/jsonl.hpp"
#include "curricula/manifest.hpp"
#include "curricula/rng.hpp"

#include "test_support.hpp"

using namespace curricula;
using testsupport::TempDir;

TEST_SUITE_BEGIN("config_manifest");

TEST_CASE("defaults are sane and pass their own validation") {
    const PipelineConfig cfg = default_config();
    CHECK(cfg.seed == 0);
    CHECK(cfg.backend == BackendKind::mock);
    CHECK(cfg.out_dir == "out");
    CHECK(cfg.n_queries == 10);
    CHECK(cfg.questions_per_syllabus == 10);
    CHECK(cfg.dual_fraction == doctest::Approx(0.5));
    CHECK(cfg.per_discipline == 50);
    CHECK(cfg.ngram == 10);
    CHECK(cfg.gateway.requests_per_interval == 60);
    CHECK(cfg.gateway.interval_ms == 60000);
    CHECK(cfg.stages.question.model == "gpt-4");
    CHECK(cfg.stages.question.sampling.temperature == doctest::Approx(1.0));
    CHECK(cfg.stages.question.sampling.top_p == doctest::Approx(0.95));
    CHECK(cfg.stages.answer.model == "gpt-3.5-turbo");
    CHECK(cfg.stages.answer.sampling.temperature == doctest::Approx(0.7));
    CHECK(cfg.stages.conversion.sampling.temperature == doctest::Approx(0.0));
    CHECK(cfg.stages.class_details.sampling.temperature == doctest::Approx(0.0));
    CHECK(cfg.stages.judge.sampling.temperature == doctest::Approx(0.0));
    // An empty JSON object reproduces the defaults.
    CHECK_NOTHROW(config_from_json(nlohmann::json::object()));
    CHECK(config_digest(config_from_json(nlohmann::json::object())) == config_digest(cfg));
}

TEST_CASE("config_from_json applies overrides") {
    const auto cfg = config_from_json(nlohmann::json::parse(R"({
        "run": {"seed": 42, "backend": "real", "out_dir": "runs/a"},
        "gateway": {"requests_per_interval": 5, "interval_ms": 1000},
        "http": {"base_url": "http://localhost:9999", "timeout_ms": 250},
        "stages": {"question": {"model": "m-q", "temperature": 0.5}},
        "generation": {"n_queries": 3, "questions_per_syllabus": 4, "dual_fraction": 0.25,
                       "max_pairs_total": 77, "failure_threshold": 0.1, "shard_max_lines": 9},
        "decontamination": {"ngram": 8, "corpora": [
            {"name": "bench", "split": "test", "path": "data/bench.jsonl",
             "format": "jsonl", "prompt_field": "q"}]},
        "evaluation": {"per_discipline": 7},
        "paths": {"taxonomy": "tax.json", "field_map": "fields.json"}
    })"));
    CHECK(cfg.seed == 42);
    CHECK(cfg.backend == BackendKind::real);
    CHECK(cfg.out_dir == "runs/a");
    CHECK(cfg.gateway.requests_per_interval == 5);
    CHECK(cfg.http.base_url == "http://localhost:9999");
    CHECK(cfg.stages.question.model == "m-q");
    CHECK(cfg.stages.question.sampling.temperature == doctest::Approx(0.5));
    CHECK(cfg.stages.question.sampling.top_p == doctest::Approx(0.95));  // untouched
    CHECK(cfg.stages.answer.model == "gpt-3.5-turbo");                   // untouched
    CHECK(cfg.n_queries == 3);
    CHECK(cfg.questions_per_syllabus == 4);
    CHECK(cfg.dual_fraction == doctest::Approx(0.25));
    CHECK(cfg.max_pairs_total == 77);
    CHECK(cfg.shard_max_lines == 9);
    CHECK(cfg.ngram == 8);
    REQUIRE(cfg.corpora.size() == 1);
    CHECK(cfg.corpora[0].name == "bench");
    CHECK(cfg.corpora[0].split == Split::test);
    CHECK(cfg.corpora[0].format == "jsonl");
    CHECK(cfg.corpora[0].prompt_field == "q");
    CHECK(cfg.per_discipline == 7);
    CHECK(cfg.taxonomy_path == "tax.json");
    CHECK(cfg.field_map_path == "fields.json");
}

TEST_CASE("unknown keys are rejected per section") {
    CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"rnu": {}})")), ConfigError);
    CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"run": {"sed": 1}})")),
                    ConfigError);
    CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"gateway": {"rps": 1}})")),
                    ConfigError);
    CHECK_THROWS_AS(
        config_from_json(nlohmann::json::parse(R"({"stages": {"question": {"temp": 1}}})")),
        ConfigError);
    CHECK_THROWS_AS(
        config_from_json(nlohmann::json::parse(R"({"stages": {"poetry": {"model": "m"}}})")),
        ConfigError);
    CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(
                        R"({"decontamination": {"corpora": [{"name": "x", "path": "p",
                            "url": "http://x"}]}})")),
                    ConfigError);
}

TEST_CASE("range validation") {
    auto with = [](const std::string& body) {
        return config_from_json(nlohmann::json::parse(body));
    };
    CHECK_THROWS_AS(with(R"({"run": {"backend": "cloud"}})"), ConfigError);
    CHECK_THROWS_AS(with(R"({"gateway": {"requests_per_interval": 0}})"), ConfigError);
    CHECK_THROWS_AS(with(R"({"gateway": {"backoff_factor": 0.5}})"), ConfigError);
    CHECK_THROWS_AS(with(R"({"http": {"base_url": ""}})"), ConfigError);
    CHECK_THROWS_AS(with(R"({"stages": {"question": {"model": ""}}})"), ConfigError);
    CHECK_THROWS_AS(with(R"({"stages": {"question": {"top_p": 0.0}}})"), ConfigError);
    CHECK_THROWS_AS(with(R"({"stages": {"question": {"top_p": 1.5}}})"), ConfigError);
    CHECK_THROWS_AS(with(R"({"stages": {"question": {"temperature": -0.1}}})"), ConfigError);
    CHECK_THROWS_AS(with(R"({"generation": {"dual_fraction": 1.2}})"), ConfigError);
    CHECK_THROWS_AS(with(R"({"generation": {"failure_threshold": -0.2}})"), ConfigError);
    CHECK_THROWS_AS(with(R"({"generation": {"max_pairs_total": 0}})"), ConfigError);
    CHECK_THROWS_AS(with(R"({"decontamination": {"ngram": 2}})"), ConfigError);
    CHECK_THROWS_AS(with(R"({"evaluation": {"per_discipline": 0}})"), ConfigError);
    CHECK_THROWS_AS(with(R"({"decontamination": {"corpora": [
        {"name": "a", "path": "p", "split": "dev"}]}})"),
                    ConfigError);
    CHECK_THROWS_AS(with(R"({"decontamination": {"corpora": [
        {"name": "a", "path": "p", "format": "parquet"}]}})"),
                    ConfigError);
    // Paths must be pairwise distinct.
    CHECK_THROWS_AS(with(R"({"run": {"out_dir": "same"}, "paths": {"taxonomy": "same"}})"),
                    ConfigError);
    CHECK_THROWS_AS(with(R"({"paths": {"taxonomy": "a/../t.json"},
                            "decontamination": {"corpora": [{"name": "c", "path": "t.json"}]}})"),
                    ConfigError);
}

TEST_CASE("load_config wraps io and parse failures as ConfigError") {
    TempDir dir("config");
    CHECK_THROWS_AS(load_config(dir.path() / "absent.json"), ConfigError);
    const auto path = dir.path() / "bad.json";
    write_file_atomic(path, "{ not json");
    CHECK_THROWS_AS(load_config(path), ConfigError);
    write_file_atomic(path, R"({"run": {"seed": 9}})");
    CHECK(load_config(path).seed == 9);
}

TEST_CASE("the digest ignores output locations but tracks semantics") {
    PipelineConfig base = default_config();
    const std::string d0 = config_digest(base);
    CHECK(to_hex(0x0123456789abcdefULL) == "0123456789abcdef");  // digest formatting helper

    PipelineConfig moved = base;
    moved.out_dir = "elsewhere/deeper";
    moved.taxonomy_path = "other-taxonomy.json";
    moved.field_map_path = "maps/fields.json";
    CHECK(config_digest(moved) == d0);

    PipelineConfig corpus_moved = base;
    CorpusSpec spec;
    spec.name = "bench";
    spec.split = Split::test;
    spec.path = "a/bench.txt";
    corpus_moved.corpora.push_back(spec);
    const std::string with_corpus = config_digest(corpus_moved);
    CHECK(with_corpus != d0);  // corpus identity is semantic...
    corpus_moved.corpora[0].path = "b/moved.txt";
    CHECK(config_digest(corpus_moved) == with_corpus);  // ...its location is not

    PipelineConfig reseeded = base;
    reseeded.seed = 1;
    CHECK(config_digest(reseeded) != d0);

    PipelineConfig rebackended = base;
    rebackended.backend = BackendKind::real;
    CHECK(config_digest(rebackended) != d0);

    PipelineConfig remodeled = base;
    remodeled.stages.answer.model = "other-model";
    CHECK(config_digest(remodeled) != d0);

    PipelineConfig resampled = base;
    resampled.stages.question.sampling.temperature = 0.9;
    CHECK(config_digest(resampled) != d0);

    PipelineConfig requota = base;
    requota.max_pairs_total = 999;
    CHECK(config_digest(requota) != d0);

    // Stable across processes: the canonical form is fully sorted, so equal
    // configs always digest equally.
    CHECK(config_digest(default_config()) == d0);
}

TEST_CASE("manifest construction and ledger bookkeeping") {
    RunManifest m = make_manifest("digest-1");
    CHECK(m.run_id == "digest-1");
    CHECK(m.config_digest == "digest-1");
    REQUIRE(m.stages.size() == 5);
    for (const char* name : kStageNames) {
        CHECK(m.stage(name).status == StageStatus::pending);
        CHECK(m.stage(name).items.empty());
        CHECK(m.stage(name).failed.empty());
    }
    CHECK_THROWS_AS(m.stage("compile"), ConfigError);

    StageLedger& subjects = m.stage("subjects");
    subjects.items.emplace_back("disc/a", 12);
    subjects.items.emplace_back("disc/b", 9);
    subjects.failed.push_back("disc/c");
    CHECK(subjects.has("disc/a"));
    CHECK(subjects.has("disc/c"));
    CHECK(!subjects.has("disc/d"));
    CHECK(subjects.total_lines() == 21);
}

TEST_CASE("manifest json round trip is exact and key-stable") {
    RunManifest m = make_manifest("digest-2");
    m.stage("subjects").items.emplace_back("disc/a", 4);
    m.stage("subjects").status = StageStatus::done;
    m.stage("syllabi").items.emplace_back("disc/a/subject-one", 1);
    m.stage("pairs").failed.push_back("disc/a/subject-one#deadbeef");

    const auto j = manifest_to_json(m);
    const RunManifest back = manifest_from_json(j);
    CHECK(back.run_id == m.run_id);
    CHECK(back.config_digest == m.config_digest);
    CHECK(back.stage("subjects").status == StageStatus::done);
    REQUIRE(back.stage("subjects").items.size() == 1);
    CHECK(back.stage("subjects").items[0] == std::make_pair(std::string("disc/a"), 4L));
    CHECK(back.stage("syllabi").items.size() == 1);
    CHECK(back.stage("pairs").failed == std::vector<std::string>{"disc/a/subject-one#deadbeef"});
    CHECK(back.stage("decontaminate").status == StageStatus::pending);
    CHECK(manifest_to_json(back) == j);
    // Serialization is deterministic: same manifest, same bytes.
    CHECK(manifest_to_json(m).dump(2) == j.dump(2));
}

TEST_CASE("manifest save/load and failure modes") {
    TempDir dir("manifest");
    const auto path = dir.path() / "manifest.json";
    RunManifest m = make_manifest("digest-3");
    m.stage("pairs").items.emplace_back("p1", 1);
    save_manifest(path, m);
    const RunManifest back = load_manifest(path);
    CHECK(manifest_to_json(back) == manifest_to_json(m));

    write_file_atomic(path, "{ torn");
    CHECK_THROWS_AS(load_manifest(path), ParseError);
    write_file_atomic(path, R"({"run_id": "x"})");
    CHECK_THROWS_AS(load_manifest(path), ParseError);
    write_file_atomic(path, R"({"run_id":"x","config_digest":"x","stages":{
        "subjects":{"status":"maybe","items":[],"failed":[]}}})");
    CHECK_THROWS_AS(load_manifest(path), ParseError);
}

TEST_CASE("the stage list is the pipeline order") {
    REQUIRE(kStageNames.size() == 5);
    CHECK(kStageNames[0] == std::string("subjects"));
    CHECK(kStageNames[1] == std::string("syllabi"));
    CHECK(kStageNames[2] == std::string("selections"));
    CHECK(kStageNames[3] == std::string("pairs"));
    CHECK(kStageNames[4] == std::string("decontaminate"));
}

TEST_SUITE_END();
