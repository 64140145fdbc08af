#include "curricula/taxonomy.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <map>
#include <set>
#include <utility>

#include <nlohmann/json.hpp>

#include "curricula/errors.hpp"
#include "curricula/jsonl.hpp"
#include "curricula/text.hpp"

namespace curricula {

namespace {

constexpr const char* kDisciplineTag = "[discipline]";

struct RawLine {
    int depth = 0;
    std::string name;
    bool tagged = false;
};

std::string slug_or_fallback(const std::string& name) {
    std::string s = slugify(name);
    return s.empty() ? std::string("n") : s;
}

std::string iso_utc_now() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

bool ends_with_ci(std::string_view s, std::string_view suffix) {
    if (s.size() < suffix.size()) return false;
    std::string_view tail = s.substr(s.size() - suffix.size());
    for (size_t i = 0; i < suffix.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(tail[i])) !=
            std::tolower(static_cast<unsigned char>(suffix[i])))
            return false;
    }
    return true;
}

std::vector<RawLine> scan_outline_lines(std::string_view text, bool strict,
                                        OutlineParseStats& stats) {
    std::vector<RawLine> out;
    std::vector<int> widths;  // indentation width at each open depth
    size_t line_no = 0;
    for (const auto& raw : split_lines(text)) {
        ++line_no;
        const std::string where = "line " + std::to_string(line_no) + ": ";
        if (trim(raw).empty()) continue;

        int indent = 0;
        size_t i = 0;
        for (; i < raw.size(); ++i) {
            if (raw[i] == ' ') {
                ++indent;
            } else if (raw[i] == '\t') {
                if (strict) throw ParseError(where + "tab indentation is not allowed");
                indent += 2;
            } else {
                break;
            }
        }
        std::string body = trim(raw.substr(i));
        if (!strict && (starts_with(body, "- ") || starts_with(body, "* "))) {
            body = trim(body.substr(2));
        }

        int depth;
        if (widths.empty()) {
            if (strict && indent != 0) throw ParseError(where + "first node must not be indented");
            widths.push_back(indent);
            depth = 0;
        } else if (indent == widths.back()) {
            depth = static_cast<int>(widths.size()) - 1;
        } else if (indent > widths.back()) {
            widths.push_back(indent);
            depth = static_cast<int>(widths.size()) - 1;
        } else {
            while (!widths.empty() && widths.back() > indent) widths.pop_back();
            if (!widths.empty() && widths.back() == indent) {
                depth = static_cast<int>(widths.size()) - 1;
            } else if (strict) {
                throw ParseError(where + "indentation does not match any open level");
            } else {
                widths.push_back(indent);
                depth = static_cast<int>(widths.size()) - 1;
            }
        }
        if (depth > 2) {
            if (strict) throw ParseError(where + "outline exceeds three levels");
            depth = 2;
            while (static_cast<int>(widths.size()) > 3) widths.pop_back();
            ++stats.clamped_depth;
        }

        RawLine ln;
        ln.depth = depth;
        if (strict ? body.ends_with(kDisciplineTag) : ends_with_ci(body, kDisciplineTag)) {
            ln.tagged = true;
            body = trim(body.substr(0, body.size() - std::string_view(kDisciplineTag).size()));
        }
        ln.name = body;
        if (ln.name.empty()) {
            if (strict) throw ParseError(where + "node name is empty");
            ++stats.skipped_lines;
            continue;
        }
        out.push_back(std::move(ln));
    }
    return out;
}

std::vector<TaxonomyNode> assemble_level(const std::vector<RawLine>& lines, size_t& pos, int depth,
                                         bool strict, OutlineParseStats& stats) {
    std::vector<TaxonomyNode> out;
    while (pos < lines.size() && lines[pos].depth == depth) {
        const RawLine ln = lines[pos];
        ++pos;
        TaxonomyNode node;
        node.name = ln.name;
        if (pos < lines.size() && lines[pos].depth == depth + 1) {
            node.children = assemble_level(lines, pos, depth + 1, strict, stats);
        }
        const bool leaf = node.children.empty();
        if (leaf && depth == 0) {
            if (strict) {
                throw ParseError("root line '" + node.name + "' must be a field with children");
            }
            TaxonomyNode child;
            child.name = node.name;
            node.children.push_back(std::move(child));
            ++stats.wrapped_roots;
        } else if (ln.tagged && !leaf) {
            if (strict) {
                throw ParseError("'" + node.name + "' carries " + kDisciplineTag +
                                 " but has children");
            }
            ++stats.ignored_tags;
        } else if (!ln.tagged && leaf) {
            if (strict) {
                throw ParseError("leaf line '" + node.name + "' is missing the " +
                                 std::string(kDisciplineTag) + " suffix");
            }
            ++stats.coerced_leaves;
        }
        out.push_back(std::move(node));
    }
    return out;
}

void assign_ids_rec(TaxonomyNode& node, const std::string& parent_id, int depth,
                    std::map<std::string, int>& sibling_slugs) {
    std::string slug = slug_or_fallback(node.name);
    const int seen = ++sibling_slugs[slug];
    if (seen > 1) slug += "-" + std::to_string(seen);
    node.id = parent_id.empty() ? slug : parent_id + "/" + slug;
    if (node.children.empty()) {
        node.kind = NodeKind::discipline;
    } else {
        node.kind = depth == 0 ? NodeKind::field : NodeKind::subfield;
    }
    std::map<std::string, int> child_slugs;
    for (auto& child : node.children) assign_ids_rec(child, node.id, depth + 1, child_slugs);
}

void format_rec(const TaxonomyNode& node, int depth, std::string& out) {
    out.append(static_cast<size_t>(depth) * 2, ' ');
    out += node.name;
    if (node.kind == NodeKind::discipline) {
        out += " ";
        out += kDisciplineTag;
    }
    out += '\n';
    for (const auto& child : node.children) format_rec(child, depth + 1, out);
}

const char* kind_name(NodeKind k) {
    switch (k) {
        case NodeKind::field: return "field";
        case NodeKind::subfield: return "subfield";
        case NodeKind::discipline: return "discipline";
    }
    throw ParseError("node kind out of range");
}

NodeKind kind_from_name(const std::string& s) {
    if (s == "field") return NodeKind::field;
    if (s == "subfield") return NodeKind::subfield;
    if (s == "discipline") return NodeKind::discipline;
    throw ParseError("unknown node kind '" + s + "'");
}

nlohmann::json node_to_json(const TaxonomyNode& node) {
    nlohmann::json j = {{"id", node.id}, {"name", node.name}, {"kind", kind_name(node.kind)}};
    auto& children = j["children"] = nlohmann::json::array();
    for (const auto& child : node.children) children.push_back(node_to_json(child));
    return j;
}

TaxonomyNode node_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("name")) throw ParseError("taxonomy node must be an object with a name");
    TaxonomyNode node;
    node.id = j.value("id", "");
    node.name = j["name"].get<std::string>();
    node.kind = kind_from_name(j.value("kind", "discipline"));
    for (const auto& child : j.value("children", nlohmann::json::array())) {
        node.children.push_back(node_from_json(child));
    }
    return node;
}

void validate_rec(const TaxonomyNode& node, int depth, std::set<std::string>& ids) {
    if (trim(node.name).empty()) throw ParseError("taxonomy contains a node with an empty name");
    if (node.id.empty()) throw ParseError("node '" + node.name + "' has no id");
    if (!ids.insert(node.id).second) throw ParseError("duplicate node id '" + node.id + "'");
    if (depth > 2) throw ParseError("node '" + node.name + "' exceeds three levels");
    const bool leaf = node.children.empty();
    if (leaf != (node.kind == NodeKind::discipline)) {
        throw ParseError("node '" + node.name + "' violates the discipline-iff-leaf rule");
    }
    if (depth == 0 && node.kind != NodeKind::field) {
        throw ParseError("root node '" + node.name + "' must be a field");
    }
    for (const auto& child : node.children) validate_rec(child, depth + 1, ids);
}

bool same_node(const TaxonomyNode& a, const TaxonomyNode& b) {
    if (a.name != b.name || a.kind != b.kind || a.children.size() != b.children.size()) return false;
    for (size_t i = 0; i < a.children.size(); ++i) {
        if (!same_node(a.children[i], b.children[i])) return false;
    }
    return true;
}

void merge_children(std::vector<TaxonomyNode>& dst, const std::vector<TaxonomyNode>& src) {
    std::map<std::string, size_t> by_name;
    for (size_t i = 0; i < dst.size(); ++i) by_name[normalize_name(dst[i].name)] = i;
    for (const auto& node : src) {
        const std::string key = normalize_name(node.name);
        auto it = by_name.find(key);
        if (it == by_name.end()) {
            by_name[key] = dst.size();
            dst.push_back(node);
        } else {
            merge_children(dst[it->second].children, node.children);
        }
    }
}

void collect_ids(const TaxonomyNode& node, std::set<std::string>& ids) {
    ids.insert(node.id);
    for (const auto& child : node.children) collect_ids(child, ids);
}

struct VoteTally {
    int keep = 0;
    int remove = 0;
};

/// Post-order filter: drops majority-removed subtrees, then drops branches
/// left without any discipline descendant.
std::vector<TaxonomyNode> filter_nodes(const std::vector<TaxonomyNode>& nodes,
                                       const std::map<std::string, VoteTally>& tallies) {
    std::vector<TaxonomyNode> out;
    for (const auto& node : nodes) {
        if (auto it = tallies.find(node.id); it != tallies.end() &&
                                             it->second.remove > it->second.keep) {
            continue;
        }
        TaxonomyNode kept = node;
        kept.children = filter_nodes(node.children, tallies);
        if (kept.kind != NodeKind::discipline && kept.children.empty()) continue;
        out.push_back(std::move(kept));
    }
    return out;
}

}  // namespace

Taxonomy parse_outline(std::string_view text, bool strict, OutlineParseStats* stats) {
    OutlineParseStats local;
    OutlineParseStats& st = stats ? *stats : local;
    const std::vector<RawLine> lines = scan_outline_lines(text, strict, st);
    size_t pos = 0;
    Taxonomy t;
    t.roots = assemble_level(lines, pos, 0, strict, st);
    if (pos != lines.size()) throw ParseError("outline structure is inconsistent");
    if (strict && t.roots.empty()) throw ParseError("outline contains no nodes");
    reassign_ids(t);
    return t;
}

std::string format_outline(const Taxonomy& t) {
    std::string out;
    for (const auto& root : t.roots) format_rec(root, 0, out);
    return out;
}

void reassign_ids(Taxonomy& t) {
    std::map<std::string, int> root_slugs;
    for (auto& root : t.roots) assign_ids_rec(root, "", 0, root_slugs);
}

nlohmann::json taxonomy_to_json(const Taxonomy& t) {
    nlohmann::json j = {
        {"status", t.status == TaxonomyStatus::finalized ? "finalized" : "draft"},
        {"provenance", {{"model", t.provenance.model}, {"created_at", t.provenance.created_at}}},
    };
    auto& roots = j["roots"] = nlohmann::json::array();
    for (const auto& root : t.roots) roots.push_back(node_to_json(root));
    return j;
}

Taxonomy taxonomy_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ParseError("taxonomy JSON must be an object");
    Taxonomy t;
    const std::string status = j.value("status", "draft");
    if (status == "finalized") {
        t.status = TaxonomyStatus::finalized;
    } else if (status == "draft") {
        t.status = TaxonomyStatus::draft;
    } else {
        throw ParseError("unknown taxonomy status '" + status + "'");
    }
    if (j.contains("provenance")) {
        t.provenance.model = j["provenance"].value("model", "");
        t.provenance.created_at = j["provenance"].value("created_at", "");
    }
    for (const auto& root : j.value("roots", nlohmann::json::array())) {
        t.roots.push_back(node_from_json(root));
    }
    std::set<std::string> ids;
    for (const auto& root : t.roots) validate_rec(root, 0, ids);
    return t;
}

Taxonomy load_taxonomy(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw IoError("taxonomy file not found: " + path.string());
    const std::string data = read_file(path);
    if (path.extension() == ".json") {
        nlohmann::json j = nlohmann::json::parse(data, nullptr, false);
        if (j.is_discarded()) throw ParseError("malformed taxonomy JSON: " + path.string());
        return taxonomy_from_json(j);
    }
    return parse_outline(data, /*strict=*/true);
}

bool same_structure(const Taxonomy& a, const Taxonomy& b) {
    if (a.roots.size() != b.roots.size()) return false;
    for (size_t i = 0; i < a.roots.size(); ++i) {
        if (!same_node(a.roots[i], b.roots[i])) return false;
    }
    return true;
}

Taxonomy merge_drafts(const std::vector<Taxonomy>& drafts) {
    Taxonomy merged;
    for (const auto& draft : drafts) {
        merge_children(merged.roots, draft.roots);
        if (merged.provenance.model.empty()) merged.provenance = draft.provenance;
    }
    reassign_ids(merged);
    return merged;
}

Taxonomy draft_taxonomy(Gateway& gateway, const std::vector<std::string>& prompt_set,
                        const SamplingParams& sampling, const std::string& model) {
    if (prompt_set.empty()) throw ConfigError("taxonomy drafting needs at least one prompt");
    std::vector<Taxonomy> parts;
    for (size_t i = 0; i < prompt_set.size(); ++i) {
        CompletionRequest req;
        req.purpose = Purpose::taxonomy;
        req.model = model;
        req.messages = {{"user", prompt_set[i]}};
        req.sampling = sampling;
        req.request_id = "taxonomy/draft-" + std::to_string(i);
        const CompletionResult result = gateway.complete(req);
        Taxonomy part = parse_outline(result.text, /*strict=*/false);
        if (!part.roots.empty()) parts.push_back(std::move(part));
    }
    if (parts.empty()) throw ParseError("no node structure could be extracted from any completion");
    Taxonomy draft = merge_drafts(parts);
    draft.provenance.model = model;
    draft.provenance.created_at = iso_utc_now();
    draft.status = TaxonomyStatus::draft;
    return draft;
}

Taxonomy apply_votes(const Taxonomy& draft, const std::vector<VoteSheet>& sheets,
                     bool validate_ids) {
    if (sheets.empty()) throw ConfigError("apply_votes needs at least one vote sheet");
    std::set<std::string> known;
    for (const auto& root : draft.roots) collect_ids(root, known);
    std::map<std::string, VoteTally> tallies;
    for (const auto& sheet : sheets) {
        for (const auto& [node_id, decision] : sheet.decisions) {
            if (validate_ids && !known.count(node_id)) {
                throw UnknownNodeId("vote sheet '" + sheet.annotator +
                                    "' references unknown node id '" + node_id + "'");
            }
            auto& tally = tallies[node_id];
            if (decision == VoteDecision::remove) {
                ++tally.remove;
            } else {
                ++tally.keep;
            }
        }
    }
    Taxonomy result = draft;
    result.roots = filter_nodes(draft.roots, tallies);
    return finalize(result);
}

Taxonomy finalize(const Taxonomy& t) {
    Taxonomy result = t;
    std::set<std::string> ids;
    for (const auto& root : result.roots) validate_rec(root, 0, ids);
    if (leaf_disciplines(result).empty()) {
        throw EmptyResult("taxonomy has no discipline leaves");
    }
    result.status = TaxonomyStatus::finalized;
    return result;
}

std::vector<DisciplineRef> leaf_disciplines(const Taxonomy& t) {
    std::vector<DisciplineRef> refs;
    std::vector<std::string> ancestors;
    auto walk = [&](auto&& self, const TaxonomyNode& node) -> void {
        if (node.kind == NodeKind::discipline) {
            refs.push_back({node.id, node.name, ancestors});
            return;
        }
        ancestors.push_back(node.name);
        for (const auto& child : node.children) self(self, child);
        ancestors.pop_back();
    };
    for (const auto& root : t.roots) walk(walk, root);
    return refs;
}

std::vector<VoteSheet> load_vote_sheets(const std::filesystem::path& path) {
    std::vector<VoteSheet> sheets;
    std::map<std::string, size_t> by_annotator;
    for (const auto& record : read_jsonl(path)) {
        if (!record.contains("annotator") || !record.contains("node_id") ||
            !record.contains("decision")) {
            throw ParseError(path.string() + ": vote record needs annotator, node_id, decision");
        }
        const std::string annotator = record["annotator"].get<std::string>();
        const std::string node_id = record["node_id"].get<std::string>();
        const std::string decision = record["decision"].get<std::string>();
        VoteDecision vote;
        if (decision == "keep") {
            vote = VoteDecision::keep;
        } else if (decision == "remove") {
            vote = VoteDecision::remove;
        } else {
            throw ParseError(path.string() + ": decision must be 'keep' or 'remove', got '" +
                             decision + "'");
        }
        auto [it, inserted] = by_annotator.try_emplace(annotator, sheets.size());
        if (inserted) sheets.push_back({annotator, {}});
        sheets[it->second].decisions[node_id] = vote;
    }
    return sheets;
}

}  // namespace curricula
