#pragma once

// Randomized voting property engine shared by the unit suite and the
// acceptance gate. For each random (tree, vote sheets) case the expected
// surviving node set is computed by an independent oracle — direct
// strict-majority removal, ancestor cascade, and pruning of branches left
// without discipline descendants — and compared against apply_votes.

#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "curricula/errors.hpp"
#include "curricula/rng.hpp"
#include "curricula/taxonomy.hpp"

namespace testsupport {

inline curricula::Taxonomy random_taxonomy(curricula::Rng& rng) {
    using curricula::TaxonomyNode;
    static const std::vector<std::string> words = {
        "alpha", "beta",  "gamma", "delta", "epsilon", "zeta", "eta",
        "theta", "iota",  "kappa", "lambda", "mu",     "nu",   "xi"};
    auto name = [&] { return rng.pick(words) + " " + rng.pick(words); };

    curricula::Taxonomy t;
    const int n_fields = 1 + static_cast<int>(rng.below(3));
    for (int f = 0; f < n_fields; ++f) {
        TaxonomyNode field;
        field.name = name();
        const int direct = static_cast<int>(rng.below(3));
        const int n_sub = static_cast<int>(rng.below(3));
        for (int d = 0; d < direct; ++d) {
            TaxonomyNode disc;
            disc.name = name();
            field.children.push_back(disc);
        }
        for (int s = 0; s < n_sub; ++s) {
            TaxonomyNode sub;
            sub.name = name();
            const int leaves = 1 + static_cast<int>(rng.below(3));
            for (int d = 0; d < leaves; ++d) {
                TaxonomyNode disc;
                disc.name = name();
                sub.children.push_back(disc);
            }
            field.children.push_back(sub);
        }
        if (field.children.empty()) {  // a field must lead to a discipline
            TaxonomyNode disc;
            disc.name = name();
            field.children.push_back(disc);
        }
        t.roots.push_back(field);
    }
    curricula::reassign_ids(t);
    return t;
}

inline std::vector<std::string> all_node_ids(const curricula::Taxonomy& t) {
    std::vector<std::string> ids;
    std::function<void(const curricula::TaxonomyNode&)> walk =
        [&](const curricula::TaxonomyNode& n) {
            ids.push_back(n.id);
            for (const auto& c : n.children) walk(c);
        };
    for (const auto& r : t.roots) walk(r);
    return ids;
}

inline std::vector<curricula::VoteSheet> random_sheets(const curricula::Taxonomy& t,
                                                       curricula::Rng& rng) {
    const auto ids = all_node_ids(t);
    std::vector<curricula::VoteSheet> sheets;
    const int n_sheets = 1 + static_cast<int>(rng.below(5));
    for (int s = 0; s < n_sheets; ++s) {
        curricula::VoteSheet sheet;
        sheet.annotator = "annotator-" + std::to_string(s);
        for (const auto& id : ids) {
            const uint64_t roll = rng.below(10);
            if (roll < 3)
                sheet.decisions[id] = curricula::VoteDecision::remove;
            else if (roll < 6)
                sheet.decisions[id] = curricula::VoteDecision::keep;
            // else: no vote on this node from this annotator
        }
        sheets.push_back(std::move(sheet));
    }
    return sheets;
}

/// Oracle: the set of node ids that must survive the vote.
inline std::set<std::string> expected_survivors(const curricula::Taxonomy& t,
                                                const std::vector<curricula::VoteSheet>& sheets) {
    struct Tally {
        int keep = 0;
        int remove = 0;
    };
    std::map<std::string, Tally> tally;
    for (const auto& sheet : sheets)
        for (const auto& [id, decision] : sheet.decisions) {
            if (decision == curricula::VoteDecision::keep)
                ++tally[id].keep;
            else
                ++tally[id].remove;
        }

    std::set<std::string> expected;
    // Returns whether the subtree rooted here contributes a surviving
    // discipline, given that every ancestor survived (`parent_ok`).
    std::function<bool(const curricula::TaxonomyNode&, bool)> visit =
        [&](const curricula::TaxonomyNode& node, bool parent_ok) -> bool {
        const Tally t_node = tally.count(node.id) ? tally.at(node.id) : Tally{};
        const bool removed = t_node.remove > t_node.keep;
        const bool ok = parent_ok && !removed;
        if (node.children.empty()) {
            if (ok) expected.insert(node.id);
            return ok;
        }
        bool any = false;
        for (const auto& child : node.children)
            if (visit(child, ok)) any = true;
        if (ok && any) expected.insert(node.id);
        return ok && any;
    };
    for (const auto& root : t.roots) visit(root, true);
    return expected;
}

/// Runs `n_cases` random cases; returns the number of violations and appends
/// a description of the first few to `log`.
inline int run_vote_property_cases(int n_cases, uint64_t seed, std::string* log = nullptr) {
    curricula::Rng rng(seed);
    int violations = 0;
    auto report = [&](int case_no, const std::string& what) {
        ++violations;
        if (log && violations <= 5) {
            std::ostringstream os;
            os << "case " << case_no << ": " << what << "\n";
            *log += os.str();
        }
    };

    for (int case_no = 0; case_no < n_cases; ++case_no) {
        const curricula::Taxonomy draft = random_taxonomy(rng);
        const auto sheets = random_sheets(draft, rng);
        const auto expected = expected_survivors(draft, sheets);

        const bool any_discipline_left = [&] {
            for (const auto& id : expected) {
                bool is_leaf = true;
                // A surviving node with no surviving strict descendant in
                // `expected` could still be a branch; check against the draft.
                std::function<const curricula::TaxonomyNode*(const curricula::TaxonomyNode&)>
                    find = [&](const curricula::TaxonomyNode& n)
                    -> const curricula::TaxonomyNode* {
                    if (n.id == id) return &n;
                    for (const auto& c : n.children)
                        if (const auto* hit = find(c)) return hit;
                    return nullptr;
                };
                const curricula::TaxonomyNode* node = nullptr;
                for (const auto& r : draft.roots)
                    if ((node = find(r))) break;
                is_leaf = node && node->children.empty();
                if (is_leaf) return true;
            }
            return false;
        }();

        if (!any_discipline_left) {
            try {
                curricula::apply_votes(draft, sheets);
                report(case_no, "expected EmptyResult, got a taxonomy");
            } catch (const curricula::EmptyResult&) {
                // expected
            }
            continue;
        }

        curricula::Taxonomy voted;
        try {
            voted = curricula::apply_votes(draft, sheets);
        } catch (const std::exception& e) {
            report(case_no, std::string("unexpected error: ") + e.what());
            continue;
        }

        const auto got_ids = all_node_ids(voted);
        const std::set<std::string> got(got_ids.begin(), got_ids.end());
        if (got != expected) {
            report(case_no, "survivor sets differ (got " + std::to_string(got.size()) +
                                ", expected " + std::to_string(expected.size()) + ")");
            continue;
        }

        // Monotonicity: voting never adds disciplines.
        if (curricula::leaf_disciplines(voted).size() >
            curricula::leaf_disciplines(draft).size())
            report(case_no, "voting increased the discipline count");

        // Idempotence: re-applying the same sheets changes nothing.
        try {
            const curricula::Taxonomy again =
                curricula::apply_votes(voted, sheets, /*validate_ids=*/false);
            if (curricula::taxonomy_to_json(again) != curricula::taxonomy_to_json(voted))
                report(case_no, "re-applying the sheets changed the tree");
        } catch (const std::exception& e) {
            report(case_no, std::string("idempotence check raised: ") + e.what());
        }
    }
    return violations;
}

}  // namespace testsupport
