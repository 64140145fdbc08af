#include "curricula/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "curricula/errors.hpp"

namespace curricula {

namespace {

constexpr int kMaxConcepts = 5;

/// Pool entry: a concept addressed by (position-in-sessions-vector, concept
/// position), carried with its 1-based session index.
struct PoolItem {
    int session_index;
    const std::string* concept_text;
};

ConceptSelection finish_selection(const Syllabus& sy, Strategy strategy,
                                  std::vector<int> session_indices,
                                  std::vector<ConceptRef> concepts) {
    std::sort(session_indices.begin(), session_indices.end());
    std::sort(concepts.begin(), concepts.end());
    ConceptSelection sel;
    sel.syllabus_ref = sy.id;
    sel.strategy = strategy;
    sel.session_indices = std::move(session_indices);
    sel.concepts = std::move(concepts);
    sel.canonical_key = selection_canonical_key(sel.syllabus_ref, sel.session_indices, sel.concepts);
    return sel;
}

/// Iterates all k-combinations of [0, n) in lexicographic order.
template <typename Fn>
void for_each_combination(int n, int k, Fn&& fn) {
    if (k > n || k <= 0) return;
    std::vector<int> idx(k);
    for (int i = 0; i < k; ++i) idx[i] = i;
    for (;;) {
        fn(idx);
        int i = k - 1;
        while (i >= 0 && idx[i] == n - k + i) --i;
        if (i < 0) return;
        ++idx[i];
        for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
}

void enumerate_single(const Syllabus& sy, std::vector<ConceptSelection>& out) {
    for (const auto& session : sy.sessions) {
        const int m = static_cast<int>(session.key_concepts.size());
        for (int t = 1; t <= std::min(kMaxConcepts, m); ++t) {
            for_each_combination(m, t, [&](const std::vector<int>& idx) {
                std::vector<ConceptRef> concepts;
                concepts.reserve(idx.size());
                for (int i : idx) concepts.push_back({session.index, session.key_concepts[i]});
                out.push_back(finish_selection(sy, Strategy::single_session, {session.index},
                                               std::move(concepts)));
            });
        }
    }
}

void enumerate_dual(const Syllabus& sy, std::vector<ConceptSelection>& out) {
    const auto& sessions = sy.sessions;
    for (size_t a = 0; a < sessions.size(); ++a) {
        for (size_t b = a + 1; b < sessions.size(); ++b) {
            const int m1 = static_cast<int>(sessions[a].key_concepts.size());
            const int m2 = static_cast<int>(sessions[b].key_concepts.size());
            const int total = m1 + m2;
            for (int t = 2; t <= std::min(kMaxConcepts, total); ++t) {
                for_each_combination(total, t, [&](const std::vector<int>& idx) {
                    bool has_first = false, has_second = false;
                    for (int i : idx) (i < m1 ? has_first : has_second) = true;
                    if (!has_first || !has_second) return;
                    std::vector<ConceptRef> concepts;
                    concepts.reserve(idx.size());
                    for (int i : idx) {
                        if (i < m1) {
                            concepts.push_back({sessions[a].index, sessions[a].key_concepts[i]});
                        } else {
                            concepts.push_back({sessions[b].index, sessions[b].key_concepts[i - m1]});
                        }
                    }
                    out.push_back(finish_selection(sy, Strategy::dual_session,
                                                   {sessions[a].index, sessions[b].index},
                                                   std::move(concepts)));
                });
            }
        }
    }
}

/// Draws `quota` distinct selections into `out`/`seen` by rejection sampling,
/// falling back to a shuffled enumeration if collisions dominate.
void collect_bucket(const Syllabus& sy, Strategy strategy, uint64_t quota, Rng& rng,
                    std::set<std::string>& seen, std::vector<ConceptSelection>& out) {
    if (quota == 0) return;
    const uint64_t max_attempts = 200 + 20 * quota;
    uint64_t taken = 0;
    for (uint64_t attempt = 0; attempt < max_attempts && taken < quota; ++attempt) {
        ConceptSelection sel = sample_selection(sy, strategy, rng);
        if (seen.insert(sel.canonical_key).second) {
            out.push_back(std::move(sel));
            ++taken;
        }
    }
    if (taken == quota) return;
    std::vector<ConceptSelection> all;
    if (strategy == Strategy::single_session) {
        enumerate_single(sy, all);
    } else {
        enumerate_dual(sy, all);
    }
    std::vector<size_t> order(all.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    for (size_t i : order) {
        if (taken >= quota) break;
        if (seen.insert(all[i].canonical_key).second) {
            out.push_back(std::move(all[i]));
            ++taken;
        }
    }
}

}  // namespace

const char* strategy_name(Strategy s) {
    return s == Strategy::single_session ? "single_session" : "dual_session";
}

Strategy strategy_from_name(const std::string& name) {
    if (name == "single_session") return Strategy::single_session;
    if (name == "dual_session") return Strategy::dual_session;
    throw ParseError("unknown strategy '" + name + "'");
}

uint64_t binomial(int n, int k) {
    if (k < 0 || n < 0 || k > n) return 0;
    k = std::min(k, n - k);
    uint64_t result = 1;
    for (int i = 1; i <= k; ++i) {
        result = result * static_cast<uint64_t>(n - k + i) / static_cast<uint64_t>(i);
    }
    return result;
}

uint64_t count_single(int m) {
    if (m < 0) throw DegenerateSession("concept count cannot be negative");
    uint64_t total = 0;
    for (int i = 1; i <= std::min(kMaxConcepts, m); ++i) total += binomial(m, i);
    return total;
}

uint64_t count_dual(int m1, int m2) {
    if (m1 < 1 || m2 < 1) {
        throw DegenerateSession("dual-session counting needs at least one concept per session");
    }
    uint64_t total = 0;
    for (int i = 2; i <= kMaxConcepts; ++i) {
        total += binomial(m1 + m2, i) - binomial(m1, i) - binomial(m2, i);
    }
    return total;
}

std::string selection_canonical_key(const std::string& syllabus_ref,
                                    const std::vector<int>& session_indices,
                                    const std::vector<ConceptRef>& concepts) {
    std::string material = syllabus_ref + "|s:";
    for (int idx : session_indices) material += std::to_string(idx) + ",";
    material += "|k:";
    for (const auto& c : concepts) {
        material += std::to_string(c.session_index) + ":" + c.concept_text + ";";
    }
    return to_hex(fnv1a(material));
}

ConceptSelection sample_selection(const Syllabus& sy, Strategy strategy, Rng& rng) {
    const auto& sessions = sy.sessions;
    if (strategy == Strategy::single_session) {
        if (sessions.empty()) throw DegenerateSyllabus("syllabus has no sessions");
        const ClassSession& session = sessions[rng.below(sessions.size())];
        const int m = static_cast<int>(session.key_concepts.size());
        if (m < 1) throw DegenerateSyllabus("session '" + session.name + "' has no key concepts");
        const int t = 1 + static_cast<int>(rng.below(static_cast<uint64_t>(std::min(kMaxConcepts, m))));
        std::vector<ConceptRef> concepts;
        for (size_t i : rng.sample_indices(static_cast<size_t>(m), static_cast<size_t>(t))) {
            concepts.push_back({session.index, session.key_concepts[i]});
        }
        return finish_selection(sy, strategy, {session.index}, std::move(concepts));
    }

    if (sessions.size() < 2) {
        throw DegenerateSyllabus("dual-session sampling needs at least two sessions");
    }
    const size_t a_pos = rng.below(sessions.size());
    size_t b_pos = rng.below(sessions.size() - 1);
    if (b_pos >= a_pos) ++b_pos;
    const ClassSession& first = sessions[std::min(a_pos, b_pos)];
    const ClassSession& second = sessions[std::max(a_pos, b_pos)];
    const int m1 = static_cast<int>(first.key_concepts.size());
    const int m2 = static_cast<int>(second.key_concepts.size());
    if (m1 < 1 || m2 < 1) throw DegenerateSyllabus("selected session has no key concepts");

    const int t_max = std::min(kMaxConcepts, m1 + m2);
    const int t = 2 + static_cast<int>(rng.below(static_cast<uint64_t>(t_max - 1)));
    const size_t forced_first = rng.below(static_cast<uint64_t>(m1));
    const size_t forced_second = rng.below(static_cast<uint64_t>(m2));

    std::vector<ConceptRef> concepts = {
        {first.index, first.key_concepts[forced_first]},
        {second.index, second.key_concepts[forced_second]},
    };
    std::vector<PoolItem> pool;
    for (int i = 0; i < m1; ++i) {
        if (static_cast<size_t>(i) == forced_first) continue;
        pool.push_back({first.index, &first.key_concepts[i]});
    }
    for (int i = 0; i < m2; ++i) {
        if (static_cast<size_t>(i) == forced_second) continue;
        pool.push_back({second.index, &second.key_concepts[i]});
    }
    for (size_t i : rng.sample_indices(pool.size(), static_cast<size_t>(t - 2))) {
        concepts.push_back({pool[i].session_index, *pool[i].concept_text});
    }
    return finish_selection(sy, strategy, {first.index, second.index}, std::move(concepts));
}

std::vector<ConceptSelection> sample_batch(const Syllabus& sy, uint64_t n, double dual_fraction,
                                           Rng& rng, BatchStats* stats) {
    if (n < 1) throw ConfigError("sample_batch needs n >= 1");
    if (dual_fraction < 0.0 || dual_fraction > 1.0) {
        throw ConfigError("dual_fraction must lie in [0, 1]");
    }
    BatchStats local;
    BatchStats& st = stats ? *stats : local;

    uint64_t cap_single = 0;
    for (const auto& session : sy.sessions) {
        cap_single += count_single(static_cast<int>(session.key_concepts.size()));
    }
    uint64_t cap_dual = 0;
    for (size_t a = 0; a < sy.sessions.size(); ++a) {
        for (size_t b = a + 1; b < sy.sessions.size(); ++b) {
            cap_dual += count_dual(static_cast<int>(sy.sessions[a].key_concepts.size()),
                                   static_cast<int>(sy.sessions[b].key_concepts.size()));
        }
    }
    st.capacity_single = cap_single;
    st.capacity_dual = cap_dual;

    const uint64_t capacity = cap_single + cap_dual;
    const uint64_t target = std::min(n, capacity);
    st.shortfall = n - target;

    uint64_t n_dual = std::min(static_cast<uint64_t>(std::llround(
                                   static_cast<double>(target) * dual_fraction)),
                               cap_dual);
    uint64_t n_single = std::min(target - n_dual, cap_single);
    if (n_single + n_dual < target) n_dual = std::min(cap_dual, target - n_single);
    st.n_single = n_single;
    st.n_dual = n_dual;

    std::vector<ConceptSelection> out;
    out.reserve(target);
    std::set<std::string> seen;
    if (n_single == cap_single) {
        std::vector<ConceptSelection> all;
        enumerate_single(sy, all);
        for (auto& sel : all) {
            if (seen.insert(sel.canonical_key).second) out.push_back(std::move(sel));
        }
    } else {
        collect_bucket(sy, Strategy::single_session, n_single, rng, seen, out);
    }
    if (n_dual == cap_dual) {
        std::vector<ConceptSelection> all;
        enumerate_dual(sy, all);
        for (auto& sel : all) {
            if (seen.insert(sel.canonical_key).second) out.push_back(std::move(sel));
        }
    } else {
        collect_bucket(sy, Strategy::dual_session, n_dual, rng, seen, out);
    }
    return out;
}

nlohmann::json selection_to_json(const ConceptSelection& sel) {
    nlohmann::json concepts = nlohmann::json::array();
    for (const auto& c : sel.concepts) {
        concepts.push_back({{"session", c.session_index}, {"concept", c.concept_text}});
    }
    return {{"syllabus_ref", sel.syllabus_ref},
            {"strategy", strategy_name(sel.strategy)},
            {"session_indices", sel.session_indices},
            {"concepts", concepts},
            {"canonical_key", sel.canonical_key}};
}

ConceptSelection selection_from_json(const nlohmann::json& j) {
    ConceptSelection sel;
    sel.syllabus_ref = j.at("syllabus_ref").get<std::string>();
    sel.strategy = strategy_from_name(j.at("strategy").get<std::string>());
    sel.session_indices = j.at("session_indices").get<std::vector<int>>();
    for (const auto& c : j.at("concepts")) {
        sel.concepts.push_back({c.at("session").get<int>(), c.at("concept").get<std::string>()});
    }
    sel.canonical_key = j.at("canonical_key").get<std::string>();
    return sel;
}

}  // namespace curricula
