#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "curricula/gateway.hpp"

namespace curricula {

enum class NodeKind { field, subfield, discipline };

/// A node of the knowledge taxonomy. Invariants: kind == discipline exactly
/// when children is empty; depth <= 3 (field -> sub-field -> discipline, where
/// a field may parent disciplines directly); ids are unique within a taxonomy
/// and derived from the slugified name path ("natural-sciences/chemistry").
struct TaxonomyNode {
    std::string id;
    std::string name;
    NodeKind kind = NodeKind::discipline;
    std::vector<TaxonomyNode> children;
};

struct TaxonomyProvenance {
    std::string model;
    std::string created_at;  // informational; excluded from structural equality
};

enum class TaxonomyStatus { draft, finalized };

struct Taxonomy {
    std::vector<TaxonomyNode> roots;  // fields
    TaxonomyProvenance provenance;
    TaxonomyStatus status = TaxonomyStatus::draft;
};

enum class VoteDecision { keep, remove };

struct VoteSheet {
    std::string annotator;
    std::map<std::string, VoteDecision> decisions;  // node id -> decision
};

/// A leaf of the finalized taxonomy, with its ancestor names (outermost
/// first, excluding the discipline itself).
struct DisciplineRef {
    std::string id;
    std::string name;
    std::vector<std::string> ancestors;
};

/// Tallies of the repairs the lenient parser applied to model output.
struct OutlineParseStats {
    int clamped_depth = 0;   // lines deeper than the discipline level pulled up
    int coerced_leaves = 0;  // untagged leaves treated as disciplines
    int wrapped_roots = 0;   // root-level discipline lines wrapped in a field
    int ignored_tags = 0;    // [discipline] tags on branch lines dropped
    int skipped_lines = 0;   // blank/unusable lines dropped
};

/// Parses the indented outline format: one node per line, indentation depth =
/// tree depth, leaf lines suffixed with `[discipline]`. Strict mode (for
/// hand-edited files) raises ParseError on any malformed line; lenient mode
/// (for model completions) repairs what it can and tallies the repairs.
Taxonomy parse_outline(std::string_view text, bool strict, OutlineParseStats* stats = nullptr);

std::string format_outline(const Taxonomy& t);

nlohmann::json taxonomy_to_json(const Taxonomy& t);
Taxonomy taxonomy_from_json(const nlohmann::json& j);

/// Loads either serialized form by extension: ".json" -> canonical JSON,
/// anything else -> indented outline (parsed strictly).
Taxonomy load_taxonomy(const std::filesystem::path& path);

/// Ignores provenance and status; compares names, kinds, and shape.
bool same_structure(const Taxonomy& a, const Taxonomy& b);

/// Recomputes ids from slugified name paths, sibling-deduplicated with
/// numeric suffixes, and recomputes kinds from depth and leaf-ness.
void reassign_ids(Taxonomy& t);

/// Merges outline drafts by case-insensitive, whitespace-normalized name at
/// every level; when a branch and a leaf collide the branch's children win.
Taxonomy merge_drafts(const std::vector<Taxonomy>& drafts);

/// Issues every prompt through the gateway and merges the parsed completions
/// into one draft. ParseError if no completion yields any node.
Taxonomy draft_taxonomy(Gateway& gateway, const std::vector<std::string>& prompt_set,
                        const SamplingParams& sampling, const std::string& model);

/// Majority voting: a node is removed iff, among sheets that voted on it,
/// strictly more said remove than keep; removal cascades to the whole
/// subtree. Branches left without any discipline descendant are pruned.
/// With validate_ids, every referenced node id must exist (UnknownNodeId);
/// disable when re-applying sheets whose targets were already removed.
Taxonomy apply_votes(const Taxonomy& draft, const std::vector<VoteSheet>& sheets,
                     bool validate_ids = true);

/// Checks structural invariants and that >= 1 discipline remains (EmptyResult
/// otherwise), then returns the taxonomy with status = finalized.
Taxonomy finalize(const Taxonomy& t);

/// All discipline leaves in stable document order.
std::vector<DisciplineRef> leaf_disciplines(const Taxonomy& t);

/// Reads vote-sheet JSON Lines ({"annotator","node_id","decision"}) and
/// groups records into one sheet per annotator, in first-seen order.
std::vector<VoteSheet> load_vote_sheets(const std::filesystem::path& path);

}  // namespace curricula
