#include "curricula/config.hpp"

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

#include "curricula/errors.hpp"
#include "curricula/jsonl.hpp"
#include "curricula/rng.hpp"

namespace curricula {

namespace {

void expect_keys(const nlohmann::json& obj, const std::string& where,
                 std::initializer_list<const char*> keys) {
    if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [key, _] : obj.items()) {
        if (std::none_of(keys.begin(), keys.end(),
                         [&](const char* k) { return key == k; }))
            throw ConfigError("unknown key \"" + key + "\" in " + where);
    }
}

template <typename T>
void read_to(const nlohmann::json& obj, const char* key, T& out, const std::string& where) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

void read_path(const nlohmann::json& obj, const char* key, std::filesystem::path& out,
               const std::string& where) {
    std::string s = out.string();
    read_to(obj, key, s, where);
    out = s;
}

void read_stage(const nlohmann::json& stages, const char* key, StageParams& out) {
    if (!stages.contains(key)) return;
    const std::string where = std::string("stages.") + key;
    const auto& s = stages.at(key);
    expect_keys(s, where, {"model", "temperature", "top_p", "max_tokens"});
    read_to(s, "model", out.model, where);
    read_to(s, "temperature", out.sampling.temperature, where);
    read_to(s, "top_p", out.sampling.top_p, where);
    read_to(s, "max_tokens", out.sampling.max_tokens, where);
}

void check_stage(const char* name, const StageParams& p) {
    const std::string where = std::string("stages.") + name;
    if (p.model.empty()) throw ConfigError(where + ".model must be non-empty");
    if (p.sampling.temperature < 0) throw ConfigError(where + ".temperature must be >= 0");
    if (!(p.sampling.top_p > 0 && p.sampling.top_p <= 1))
        throw ConfigError(where + ".top_p must be in (0, 1]");
    if (p.sampling.max_tokens < 1) throw ConfigError(where + ".max_tokens must be >= 1");
}

nlohmann::json stage_json(const StageParams& p) {
    return {{"max_tokens", p.sampling.max_tokens},
            {"model", p.model},
            {"temperature", p.sampling.temperature},
            {"top_p", p.sampling.top_p}};
}

}  // namespace

BackendKind backend_from_name(const std::string& name) {
    if (name == "mock") return BackendKind::mock;
    if (name == "real") return BackendKind::real;
    throw ConfigError("backend must be \"mock\" or \"real\", got \"" + name + "\"");
}

const char* backend_name(BackendKind k) { return k == BackendKind::mock ? "mock" : "real"; }

PipelineConfig default_config() {
    PipelineConfig cfg;
    auto strongest = [] {
        StageParams p;
        p.model = "gpt-4";
        p.sampling = {1.0, 0.95, 4096};
        return p;
    };
    auto deterministic = [] {
        StageParams p;
        p.model = "gpt-4";
        p.sampling = {0.0, 1.0, 4096};
        return p;
    };
    cfg.stages.taxonomy = strongest();
    cfg.stages.subjects = strongest();
    cfg.stages.conversion = deterministic();
    cfg.stages.syllabus = strongest();
    cfg.stages.class_details = deterministic();
    cfg.stages.question = strongest();
    cfg.stages.answer = {"gpt-3.5-turbo", {0.7, 0.95, 4096}};
    cfg.stages.judge = deterministic();
    return cfg;
}

PipelineConfig config_from_json(const nlohmann::json& j) {
    PipelineConfig cfg = default_config();
    expect_keys(j, "config",
                {"run", "gateway", "http", "stages", "generation", "decontamination",
                 "evaluation", "paths"});

    if (j.contains("run")) {
        const auto& run = j.at("run");
        expect_keys(run, "run", {"seed", "backend", "out_dir"});
        read_to(run, "seed", cfg.seed, "run");
        if (run.contains("backend"))
            cfg.backend = backend_from_name(run.at("backend").get<std::string>());
        read_path(run, "out_dir", cfg.out_dir, "run");
    }

    if (j.contains("gateway")) {
        const auto& g = j.at("gateway");
        expect_keys(g, "gateway",
                    {"requests_per_interval", "interval_ms", "safety_margin_ms", "max_in_flight",
                     "max_retries", "backoff_base_ms", "backoff_factor", "backoff_max_ms"});
        read_to(g, "requests_per_interval", cfg.gateway.requests_per_interval, "gateway");
        read_to(g, "interval_ms", cfg.gateway.interval_ms, "gateway");
        read_to(g, "safety_margin_ms", cfg.gateway.safety_margin_ms, "gateway");
        read_to(g, "max_in_flight", cfg.gateway.max_in_flight, "gateway");
        read_to(g, "max_retries", cfg.gateway.max_retries, "gateway");
        read_to(g, "backoff_base_ms", cfg.gateway.backoff_base_ms, "gateway");
        read_to(g, "backoff_factor", cfg.gateway.backoff_factor, "gateway");
        read_to(g, "backoff_max_ms", cfg.gateway.backoff_max_ms, "gateway");
    }

    if (j.contains("http")) {
        const auto& h = j.at("http");
        expect_keys(h, "http", {"base_url", "path", "api_key_env", "timeout_ms"});
        read_to(h, "base_url", cfg.http.base_url, "http");
        read_to(h, "path", cfg.http.path, "http");
        read_to(h, "api_key_env", cfg.http.api_key_env, "http");
        read_to(h, "timeout_ms", cfg.http.timeout_ms, "http");
    }

    if (j.contains("stages")) {
        const auto& s = j.at("stages");
        expect_keys(s, "stages",
                    {"taxonomy", "subjects", "conversion", "syllabus", "class_details", "question",
                     "answer", "judge"});
        read_stage(s, "taxonomy", cfg.stages.taxonomy);
        read_stage(s, "subjects", cfg.stages.subjects);
        read_stage(s, "conversion", cfg.stages.conversion);
        read_stage(s, "syllabus", cfg.stages.syllabus);
        read_stage(s, "class_details", cfg.stages.class_details);
        read_stage(s, "question", cfg.stages.question);
        read_stage(s, "answer", cfg.stages.answer);
        read_stage(s, "judge", cfg.stages.judge);
    }

    if (j.contains("generation")) {
        const auto& g = j.at("generation");
        expect_keys(g, "generation",
                    {"n_queries", "questions_per_syllabus", "dual_fraction", "max_pairs_total",
                     "failure_threshold", "shard_max_lines"});
        read_to(g, "n_queries", cfg.n_queries, "generation");
        read_to(g, "questions_per_syllabus", cfg.questions_per_syllabus, "generation");
        read_to(g, "dual_fraction", cfg.dual_fraction, "generation");
        read_to(g, "max_pairs_total", cfg.max_pairs_total, "generation");
        read_to(g, "failure_threshold", cfg.failure_threshold, "generation");
        read_to(g, "shard_max_lines", cfg.shard_max_lines, "generation");
    }

    if (j.contains("decontamination")) {
        const auto& d = j.at("decontamination");
        expect_keys(d, "decontamination", {"ngram", "corpora"});
        read_to(d, "ngram", cfg.ngram, "decontamination");
        if (d.contains("corpora")) {
            if (!d.at("corpora").is_array())
                throw ConfigError("decontamination.corpora must be an array");
            cfg.corpora.clear();
            size_t i = 0;
            for (const auto& c : d.at("corpora")) {
                const std::string where = "decontamination.corpora[" + std::to_string(i++) + "]";
                expect_keys(c, where, {"name", "split", "path", "format", "prompt_field"});
                CorpusSpec spec;
                read_to(c, "name", spec.name, where);
                if (c.contains("split")) {
                    try {
                        spec.split = split_from_name(c.at("split").get<std::string>());
                    } catch (const ParseError&) {
                        throw ConfigError(where + ".split must be \"train\" or \"test\"");
                    }
                }
                read_path(c, "path", spec.path, where);
                read_to(c, "format", spec.format, where);
                read_to(c, "prompt_field", spec.prompt_field, where);
                if (spec.name.empty()) throw ConfigError(where + ".name must be non-empty");
                if (spec.path.empty()) throw ConfigError(where + ".path must be non-empty");
                if (spec.format != "text" && spec.format != "jsonl")
                    throw ConfigError(where + ".format must be \"text\" or \"jsonl\"");
                cfg.corpora.push_back(std::move(spec));
            }
        }
    }

    if (j.contains("evaluation")) {
        const auto& e = j.at("evaluation");
        expect_keys(e, "evaluation", {"per_discipline"});
        read_to(e, "per_discipline", cfg.per_discipline, "evaluation");
    }

    if (j.contains("paths")) {
        const auto& p = j.at("paths");
        expect_keys(p, "paths", {"taxonomy", "field_map"});
        read_path(p, "taxonomy", cfg.taxonomy_path, "paths");
        read_path(p, "field_map", cfg.field_map_path, "paths");
    }

    // Validation.
    if (cfg.gateway.requests_per_interval < 1)
        throw ConfigError("gateway.requests_per_interval must be >= 1");
    if (cfg.gateway.interval_ms < 1) throw ConfigError("gateway.interval_ms must be >= 1");
    if (cfg.gateway.safety_margin_ms < 0)
        throw ConfigError("gateway.safety_margin_ms must be >= 0");
    if (cfg.gateway.max_in_flight < 1) throw ConfigError("gateway.max_in_flight must be >= 1");
    if (cfg.gateway.max_retries < 0) throw ConfigError("gateway.max_retries must be >= 0");
    if (cfg.gateway.backoff_base_ms < 0) throw ConfigError("gateway.backoff_base_ms must be >= 0");
    if (cfg.gateway.backoff_factor < 1.0)
        throw ConfigError("gateway.backoff_factor must be >= 1");
    if (cfg.gateway.backoff_max_ms < 0) throw ConfigError("gateway.backoff_max_ms must be >= 0");
    if (cfg.http.base_url.empty()) throw ConfigError("http.base_url must be non-empty");
    if (cfg.http.timeout_ms < 1) throw ConfigError("http.timeout_ms must be >= 1");
    check_stage("taxonomy", cfg.stages.taxonomy);
    check_stage("subjects", cfg.stages.subjects);
    check_stage("conversion", cfg.stages.conversion);
    check_stage("syllabus", cfg.stages.syllabus);
    check_stage("class_details", cfg.stages.class_details);
    check_stage("question", cfg.stages.question);
    check_stage("answer", cfg.stages.answer);
    check_stage("judge", cfg.stages.judge);
    if (cfg.n_queries < 1) throw ConfigError("generation.n_queries must be >= 1");
    if (cfg.questions_per_syllabus < 1)
        throw ConfigError("generation.questions_per_syllabus must be >= 1");
    if (!(cfg.dual_fraction >= 0 && cfg.dual_fraction <= 1))
        throw ConfigError("generation.dual_fraction must be in [0, 1]");
    if (cfg.max_pairs_total < 1) throw ConfigError("generation.max_pairs_total must be >= 1");
    if (!(cfg.failure_threshold >= 0 && cfg.failure_threshold <= 1))
        throw ConfigError("generation.failure_threshold must be in [0, 1]");
    if (cfg.shard_max_lines < 1) throw ConfigError("generation.shard_max_lines must be >= 1");
    if (cfg.ngram < 3) throw ConfigError("decontamination.ngram must be >= 3");
    if (cfg.per_discipline < 1) throw ConfigError("evaluation.per_discipline must be >= 1");
    if (cfg.taxonomy_path.empty()) throw ConfigError("paths.taxonomy must be non-empty");
    if (cfg.out_dir.empty()) throw ConfigError("run.out_dir must be non-empty");

    // All configured paths must be distinct.
    std::set<std::string> seen;
    auto check_distinct = [&](const std::filesystem::path& p, const std::string& what) {
        if (p.empty()) return;
        if (!seen.insert(p.lexically_normal().string()).second)
            throw ConfigError("paths must be distinct; duplicate " + what + ": " + p.string());
    };
    check_distinct(cfg.out_dir, "run.out_dir");
    check_distinct(cfg.taxonomy_path, "paths.taxonomy");
    check_distinct(cfg.field_map_path, "paths.field_map");
    for (const auto& c : cfg.corpora) check_distinct(c.path, "corpus path");

    return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const IoError&) {
        throw ConfigError("cannot read config file: " + path.string());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

nlohmann::json canonical_config_json(const PipelineConfig& cfg) {
    nlohmann::json corpora = nlohmann::json::array();
    for (const auto& c : cfg.corpora)
        corpora.push_back({{"format", c.format},
                           {"name", c.name},
                           {"prompt_field", c.prompt_field},
                           {"split", split_name(c.split)}});
    return {
        {"decontamination", {{"corpora", corpora}, {"ngram", cfg.ngram}}},
        {"evaluation", {{"per_discipline", cfg.per_discipline}}},
        {"gateway",
         {{"backoff_base_ms", cfg.gateway.backoff_base_ms},
          {"backoff_factor", cfg.gateway.backoff_factor},
          {"backoff_max_ms", cfg.gateway.backoff_max_ms},
          {"interval_ms", cfg.gateway.interval_ms},
          {"max_in_flight", cfg.gateway.max_in_flight},
          {"max_retries", cfg.gateway.max_retries},
          {"requests_per_interval", cfg.gateway.requests_per_interval},
          {"safety_margin_ms", cfg.gateway.safety_margin_ms}}},
        {"generation",
         {{"dual_fraction", cfg.dual_fraction},
          {"failure_threshold", cfg.failure_threshold},
          {"max_pairs_total", cfg.max_pairs_total},
          {"n_queries", cfg.n_queries},
          {"questions_per_syllabus", cfg.questions_per_syllabus},
          {"shard_max_lines", cfg.shard_max_lines}}},
        {"http",
         {{"api_key_env", cfg.http.api_key_env},
          {"base_url", cfg.http.base_url},
          {"path", cfg.http.path},
          {"timeout_ms", cfg.http.timeout_ms}}},
        {"run", {{"backend", backend_name(cfg.backend)}, {"seed", cfg.seed}}},
        {"stages",
         {{"answer", stage_json(cfg.stages.answer)},
          {"class_details", stage_json(cfg.stages.class_details)},
          {"conversion", stage_json(cfg.stages.conversion)},
          {"judge", stage_json(cfg.stages.judge)},
          {"question", stage_json(cfg.stages.question)},
          {"subjects", stage_json(cfg.stages.subjects)},
          {"syllabus", stage_json(cfg.stages.syllabus)},
          {"taxonomy", stage_json(cfg.stages.taxonomy)}}},
    };
}

std::string config_digest(const PipelineConfig& cfg) {
    return to_hex(fnv1a(canonical_config_json(cfg).dump()));
}

}  // namespace curricula
