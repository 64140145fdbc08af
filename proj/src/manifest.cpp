#include "curricula/manifest.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "curricula/errors.hpp"
#include "curricula/jsonl.hpp"

namespace curricula {

bool StageLedger::has(const std::string& id) const {
    if (std::any_of(items.begin(), items.end(),
                    [&](const auto& item) { return item.first == id; }))
        return true;
    return std::find(failed.begin(), failed.end(), id) != failed.end();
}

long StageLedger::total_lines() const {
    long total = 0;
    for (const auto& [_, n] : items) total += n;
    return total;
}

StageLedger& RunManifest::stage(const std::string& name) {
    auto it = stages.find(name);
    if (it == stages.end()) throw ConfigError("unknown pipeline stage: " + name);
    return it->second;
}

const StageLedger& RunManifest::stage(const std::string& name) const {
    auto it = stages.find(name);
    if (it == stages.end()) throw ConfigError("unknown pipeline stage: " + name);
    return it->second;
}

RunManifest make_manifest(const std::string& config_digest) {
    RunManifest m;
    m.run_id = config_digest;
    m.config_digest = config_digest;
    for (const char* name : kStageNames) m.stages[name] = StageLedger{};
    return m;
}

nlohmann::json manifest_to_json(const RunManifest& m) {
    nlohmann::json stages;
    for (const char* name : kStageNames) {
        const StageLedger& ledger = m.stage(name);
        nlohmann::json items = nlohmann::json::array();
        for (const auto& [id, n] : ledger.items)
            items.push_back(nlohmann::json::array({id, n}));
        stages[name] = {{"status", ledger.status == StageStatus::done ? "done" : "pending"},
                        {"items", items},
                        {"failed", ledger.failed}};
    }
    return nlohmann::json{
        {"run_id", m.run_id}, {"config_digest", m.config_digest}, {"stages", stages}};
}

RunManifest manifest_from_json(const nlohmann::json& j) {
    RunManifest m;
    try {
        m.run_id = j.at("run_id").get<std::string>();
        m.config_digest = j.at("config_digest").get<std::string>();
        const auto& stages = j.at("stages");
        for (const char* name : kStageNames) {
            StageLedger ledger;
            if (stages.contains(name)) {
                const auto& s = stages.at(name);
                const auto status = s.at("status").get<std::string>();
                if (status != "pending" && status != "done")
                    throw ParseError("bad stage status: " + status);
                ledger.status = status == "done" ? StageStatus::done : StageStatus::pending;
                for (const auto& item : s.at("items"))
                    ledger.items.emplace_back(item.at(0).get<std::string>(),
                                              item.at(1).get<long>());
                for (const auto& id : s.at("failed"))
                    ledger.failed.push_back(id.get<std::string>());
            }
            m.stages[name] = std::move(ledger);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed run manifest: ") + e.what());
    }
    return m;
}

void save_manifest(const std::filesystem::path& path, const RunManifest& m) {
    write_file_atomic(path, manifest_to_json(m).dump(2) + "\n");
}

RunManifest load_manifest(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return manifest_from_json(j);
}

}  // namespace curricula
