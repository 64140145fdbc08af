#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "curricula/rng.hpp"
#include "curricula/syllabus.hpp"

namespace curricula {

enum class Strategy { single_session, dual_session };

const char* strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);

struct ConceptRef {
    int session_index = 0;  // 1-based syllabus session index
    std::string concept_text;

    auto operator<=>(const ConceptRef&) const = default;
};

/// A sampled (sessions, concepts) tuple seeding one homework question.
/// Invariants: single_session holds one session and 1-5 concepts from it;
/// dual_session holds two distinct sessions and 2-5 distinct concepts total
/// with at least one from each. session_indices and concepts are sorted, and
/// canonical_key hashes the sorted content so dedup ignores sampling order.
struct ConceptSelection {
    std::string syllabus_ref;
    Strategy strategy = Strategy::single_session;
    std::vector<int> session_indices;
    std::vector<ConceptRef> concepts;
    std::string canonical_key;
};

/// Exact C(n, k) in unsigned 64-bit arithmetic.
uint64_t binomial(int n, int k);

/// Number of valid single-session selections over m concepts:
/// sum over i = 1..min(5, m) of C(m, i).
uint64_t count_single(int m);

/// Number of valid dual-session selections over sessions of m1 and m2
/// concepts: sum over i = 2..5 of C(m1+m2, i) - C(m1, i) - C(m2, i), i.e. the
/// 2-5-element subsets of the union touching both sessions. DegenerateSession
/// if either side is empty.
uint64_t count_dual(int m1, int m2);

std::string selection_canonical_key(const std::string& syllabus_ref,
                                    const std::vector<int>& session_indices,
                                    const std::vector<ConceptRef>& concepts);

/// Samples one valid selection; every valid selection of the strategy has
/// positive probability (dual selections are built constructively: one forced
/// concept per session, then 0-3 fills from the union). DegenerateSyllabus if
/// the syllabus cannot support the strategy.
ConceptSelection sample_selection(const Syllabus& sy, Strategy strategy, Rng& rng);

struct BatchStats {
    uint64_t capacity_single = 0;
    uint64_t capacity_dual = 0;
    uint64_t shortfall = 0;  // requested minus returned
    size_t n_single = 0;
    size_t n_dual = 0;
};

/// Returns min(n, capacity) distinct selections (by canonical_key), targeting
/// dual_fraction dual-session selections and rebalancing toward the other
/// strategy when a bucket's capacity runs out; when a bucket is requested at
/// full capacity its portion is the exact enumeration. Shortfall is reported
/// in stats, never raised.
std::vector<ConceptSelection> sample_batch(const Syllabus& sy, uint64_t n, double dual_fraction,
                                           Rng& rng, BatchStats* stats = nullptr);

nlohmann::json selection_to_json(const ConceptSelection& sel);
ConceptSelection selection_from_json(const nlohmann::json& j);

}  // namespace curricula
