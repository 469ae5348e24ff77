#include "efoq/ground.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <deque>
#include <exception>
#include <iterator>
#include <mutex>
#include <thread>
#include <utility>

#include <nlohmann/json.hpp>

#include "efoq/error.hpp"
#include "efoq/solve.hpp"

namespace efoq {

using nlohmann::json;

PositiveSplit split_positive_subgraph(const AbstractQueryGraph& g) {
    g.validate();
    PositiveSplit split;
    std::set<int> members;
    for (std::size_t ei = 0; ei < g.edges.size(); ++ei) {
        const auto& e = g.edges[ei];
        if (e.neg) {
            split.negative_edges.push_back(ei);
        } else {
            split.positive_edges.push_back(ei);
            members.insert(e.u);
            members.insert(e.v);
        }
    }
    for (int n = 0; n < g.num_nodes(); ++n) {
        if (g.kinds[n] != NodeKind::Constant && !members.count(n))
            throw ContractError("variable node " + std::to_string(n) +
                                " has no positive edge");
    }
    split.nodes.assign(members.begin(), members.end());
    return split;
}

namespace {

// An edge grounding normalized to its base relation: (even id, head node).
// Two grounded edges on the same node pair denote the same atom exactly when
// these agree, so parallel edges must differ here.
using Atom = std::pair<RelationId, int>;
using NodePair = std::pair<int, int>;

NodePair pair_key(int a, int b) { return {std::min(a, b), std::max(a, b)}; }

Atom atom_of(int head_node, RelationId r, int tail_node) {
    if (r % 2 == 0) return {r, head_node};
    return {inverse(r), tail_node};
}

// Relations r with at least one triple (h, r, t); covers both directions
// because inverse ids are materialized.
std::vector<RelationId> outgoing_relations(const KnowledgeGraph& kg,
                                           EntityId h) {
    std::vector<RelationId> out;
    for (RelationId r = 0; r < kg.num_relations(); ++r)
        if (!kg.tails(h, r).empty()) out.push_back(r);
    return out;
}

void record_edge(Grounding& grounding,
                 std::map<NodePair, std::set<Atom>>& used,
                 const AbstractEdge& e, std::size_t ei, int head_node,
                 RelationId r) {
    grounding.relations[ei] = r;
    grounding.swapped[ei] = (e.u != head_node);
    used[pair_key(e.u, e.v)].insert(atom_of(head_node, r, e.u == head_node ? e.v : e.u));
}

bool intersects_sorted(const std::vector<EntityId>& a,
                       const std::vector<EntityId>& b) {
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] < b[j]) ++i;
        else if (b[j] < a[i]) ++j;
        else return true;
    }
    return false;
}

// One attempt at grounding the positive subgraph; nullopt when a sampling
// dead end is hit.
std::optional<PositiveGrounding> try_ground_positive(
    const AbstractQueryGraph& g, const PositiveSplit& split,
    const KnowledgeGraph& kg, Rng& rng) {
    PositiveGrounding pg;
    std::map<NodePair, std::set<Atom>> used;

    std::vector<int> vars;
    for (int n : split.nodes)
        if (g.kinds[n] != NodeKind::Constant) vars.push_back(n);

    std::map<NodePair, std::vector<std::size_t>> var_edges;
    std::vector<std::size_t> const_edges;
    for (std::size_t ei : split.positive_edges) {
        const auto& e = g.edges[ei];
        bool uc = g.kinds[e.u] == NodeKind::Constant;
        bool vc = g.kinds[e.v] == NodeKind::Constant;
        if (uc || vc) const_edges.push_back(ei);
        else var_edges[pair_key(e.u, e.v)].push_back(ei);
    }

    // Witnesses spread outward from a random entity along a spanning tree,
    // one sampled triple per tree edge. The positive subgraph may fall into
    // several components (negative edges can bridge them), so each component
    // starts from its own random witness.
    for (int root : vars) {
        if (pg.witnesses.count(root)) continue;
        pg.witnesses[root] = static_cast<EntityId>(rng.below(kg.num_entities()));
        std::deque<int> queue{root};
        while (!queue.empty()) {
            int u = queue.front();
            queue.pop_front();
            EntityId wu = pg.witnesses.at(u);
            for (auto& [key, eis] : var_edges) {
                int other = key.first == u ? key.second
                          : key.second == u ? key.first
                                            : -1;
                if (other < 0 || pg.witnesses.count(other)) continue;
                auto rels = outgoing_relations(kg, wu);
                if (rels.empty()) return std::nullopt;
                RelationId r = rels[rng.below(rels.size())];
                const auto& ts = kg.tails(wu, r);
                EntityId wv = ts[rng.below(ts.size())];
                std::size_t ei = eis.front();
                record_edge(pg.grounding, used, g.edges[ei], ei, u, r);
                pg.witnesses[other] = wv;
                queue.push_back(other);
            }
        }
    }

    // Remaining variable edges close cycles or run parallel to a grounded
    // edge; both witnesses are fixed, so draw distinct atoms between them.
    for (auto& [key, eis] : var_edges) {
        for (std::size_t ei : eis) {
            if (pg.grounding.relations.count(ei)) continue;
            EntityId wu = pg.witnesses.at(key.first);
            EntityId wv = pg.witnesses.at(key.second);
            std::vector<Atom> avail;
            for (RelationId r : kg.relations_between(wu, wv)) {
                Atom a = atom_of(key.first, r, key.second);
                if (!used[key].count(a) &&
                    std::find(avail.begin(), avail.end(), a) == avail.end())
                    avail.push_back(a);
            }
            if (avail.empty()) return std::nullopt;
            Atom pick = avail[rng.below(avail.size())];
            record_edge(pg.grounding, used, g.edges[ei], ei, pick.second,
                        pick.first);
        }
    }

    // Constants are read off triples incident to their neighbor's witness.
    for (std::size_t ei : const_edges) {
        const auto& e = g.edges[ei];
        int c = g.kinds[e.u] == NodeKind::Constant ? e.u : e.v;
        int v = c == e.u ? e.v : e.u;
        EntityId wv = pg.witnesses.at(v);
        if (auto it = pg.grounding.constants.find(c);
            it != pg.grounding.constants.end()) {
            std::vector<Atom> avail;
            for (RelationId r : kg.relations_between(wv, it->second)) {
                Atom a = atom_of(v, r, c);
                if (!used[pair_key(c, v)].count(a) &&
                    std::find(avail.begin(), avail.end(), a) == avail.end())
                    avail.push_back(a);
            }
            if (avail.empty()) return std::nullopt;
            Atom pick = avail[rng.below(avail.size())];
            record_edge(pg.grounding, used, e, ei, pick.second, pick.first);
        } else {
            auto rels = outgoing_relations(kg, wv);
            if (rels.empty()) return std::nullopt;
            RelationId r = rels[rng.below(rels.size())];
            const auto& ts = kg.tails(wv, r);
            pg.grounding.constants[c] = ts[rng.below(ts.size())];
            record_edge(pg.grounding, used, e, ei, v, r);
        }
    }
    return pg;
}

std::vector<EntityId> candidate_set(const AbstractQueryGraph& g,
                                    const PositiveGrounding& pg, int node) {
    if (g.kinds[node] == NodeKind::Constant)
        return {pg.grounding.constants.at(node)};
    return pg.candidates.at(node);
}

}  // namespace

PositiveGrounding ground_positive(const AbstractQueryGraph& g,
                                  const PositiveSplit& split,
                                  const KnowledgeGraph& kg, Rng& rng,
                                  int max_retries) {
    if (kg.num_entities() == 0 || kg.num_triples() == 0)
        throw ResourceError("cannot ground on an empty knowledge graph");
    for (int attempt = 0; attempt < max_retries; ++attempt) {
        auto pg = try_ground_positive(g, split, kg, rng);
        if (!pg) continue;

        GroundedQueryGraph pos;
        for (std::size_t ei : split.positive_edges) {
            const auto& e = g.edges[ei];
            int h = pg->grounding.swapped.at(ei) ? e.v : e.u;
            int t = pg->grounding.swapped.at(ei) ? e.u : e.v;
            auto term = [&](int n) {
                return g.kinds[n] == NodeKind::Constant
                           ? Term::constant(pg->grounding.constants.at(n))
                           : Term::var(n);
            };
            pos.edges.push_back(
                {term(h), pg->grounding.relations.at(ei), term(t), false});
        }
        for (int n : split.nodes)
            if (g.kinds[n] != NodeKind::Constant) pos.free_vars.push_back(n);

        auto net = build_network(pos, kg);
        propagate(net);
        if (net.wiped)
            throw ContractError("witnessed grounding lost under propagation");
        pg->candidates = std::move(net.domains);
        return std::move(*pg);
    }
    throw ResourceError("positive grounding exhausted after " +
                        std::to_string(max_retries) + " retries");
}

void ground_negative(const AbstractQueryGraph& g, const PositiveSplit& split,
                     PositiveGrounding& pg, const KnowledgeGraph& kg, Rng& rng,
                     int max_retries) {
    std::map<NodePair, std::set<Atom>> used;
    for (auto& [ei, r] : pg.grounding.relations) {
        const auto& e = g.edges[ei];
        int head = pg.grounding.swapped.at(ei) ? e.v : e.u;
        used[pair_key(e.u, e.v)].insert(
            atom_of(head, r, head == e.u ? e.v : e.u));
    }

    for (std::size_t ei : split.negative_edges) {
        const auto& e = g.edges[ei];
        bool u_fresh = g.kinds[e.u] == NodeKind::Constant &&
                       !pg.grounding.constants.count(e.u);
        bool v_fresh = g.kinds[e.v] == NodeKind::Constant &&
                       !pg.grounding.constants.count(e.v);

        bool done = false;
        if (u_fresh || v_fresh) {
            // Fresh constant: pick a candidate of the variable endpoint and a
            // triple through it, so the difference removes that candidate.
            int c = u_fresh ? e.u : e.v;
            int v = u_fresh ? e.v : e.u;
            const auto& cand = pg.candidates.at(v);
            for (int attempt = 0; attempt < max_retries && !done; ++attempt) {
                EntityId b = cand[rng.below(cand.size())];
                auto rels = outgoing_relations(kg, b);
                if (rels.empty()) continue;
                RelationId r = rels[rng.below(rels.size())];
                const auto& ts = kg.tails(b, r);
                EntityId a = ts[rng.below(ts.size())];
                pg.grounding.constants[c] = a;
                record_edge(pg.grounding, used, e, ei, c, inverse(r));
                done = true;
            }
        } else {
            // Both endpoints carry candidate sets; the sampled relation must
            // link some candidate pair, so the negation forbids it.
            auto cu = candidate_set(g, pg, e.u);
            auto cv = candidate_set(g, pg, e.v);
            for (int attempt = 0; attempt < max_retries && !done; ++attempt) {
                bool from_u = rng.below(2) == 0;
                const auto& ca = from_u ? cu : cv;
                const auto& cb = from_u ? cv : cu;
                int na = from_u ? e.u : e.v;
                int nb = from_u ? e.v : e.u;
                EntityId a = ca[rng.below(ca.size())];
                std::vector<RelationId> rels;
                for (RelationId r = 0; r < kg.num_relations(); ++r) {
                    if (!intersects_sorted(kg.tails(a, r), cb)) continue;
                    if (used[pair_key(e.u, e.v)].count(atom_of(na, r, nb)))
                        continue;
                    rels.push_back(r);
                }
                if (rels.empty()) continue;
                RelationId r = rels[rng.below(rels.size())];
                record_edge(pg.grounding, used, e, ei, na, r);
                done = true;
            }
        }
        if (!done)
            throw ResourceError("negative grounding exhausted after " +
                                std::to_string(max_retries) + " retries");
    }
}

GroundedQueryGraph to_grounded(const AbstractQueryGraph& g,
                               const Grounding& grounding) {
    GroundedQueryGraph q;
    for (std::size_t ei = 0; ei < g.edges.size(); ++ei) {
        const auto& e = g.edges[ei];
        auto rit = grounding.relations.find(ei);
        if (rit == grounding.relations.end())
            throw ContractError("edge " + std::to_string(ei) +
                                " is not grounded");
        int h = grounding.swapped.at(ei) ? e.v : e.u;
        int t = grounding.swapped.at(ei) ? e.u : e.v;
        auto term = [&](int n) {
            if (g.kinds[n] != NodeKind::Constant) return Term::var(n);
            auto cit = grounding.constants.find(n);
            if (cit == grounding.constants.end())
                throw ContractError("constant node " + std::to_string(n) +
                                    " is not grounded");
            return Term::constant(cit->second);
        };
        q.edges.push_back({term(h), rit->second, term(t), e.neg});
    }
    for (int n = 0; n < g.num_nodes(); ++n)
        if (g.kinds[n] == NodeKind::Free) q.free_vars.push_back(n);
    return q;
}

namespace {

std::string format_formula_id(std::size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "type_%04zu", index);
    return buf;
}

std::optional<GroundedSample> try_sample(const AbstractQueryGraph& g,
                                         const PositiveSplit& split,
                                         const std::string& formula_id,
                                         int sample_index, const KgPair& kgs,
                                         const SampleConfig& cfg) {
    Rng rng = Rng(cfg.seed).derive("ground/" + formula_id + "/" +
                                   std::to_string(sample_index));
    std::size_t k = 0;
    for (auto kind : g.kinds)
        if (kind == NodeKind::Free) ++k;
    std::size_t bound =
        static_cast<std::size_t>(cfg.answer_bound_per_free) * k;

    for (int attempt = 0; attempt < cfg.max_retries; ++attempt) {
        PositiveGrounding pg;
        try {
            pg = ground_positive(g, split, kgs.full, rng, cfg.max_retries);
            ground_negative(g, split, pg, kgs.full, rng, cfg.max_retries);
        } catch (const ResourceError&) {
            return std::nullopt;
        }
        GroundedQueryGraph q = to_grounded(g, pg.grounding);

        AnswerSet full = solve_efo(q, kgs.full);
        bool bounded = true;
        for (std::size_t i = 0; i < k && bounded; ++i)
            bounded = free_var_projection(full, i).size() <= bound;
        if (!bounded) continue;

        AnswerSet easy = solve_efo(q, kgs.observed);
        GroundedSample s;
        s.formula_id = formula_id;
        s.sample_index = sample_index;
        s.query = std::move(q);
        s.easy_answers = easy;
        s.hard_answers.k = full.k;
        std::set_difference(
            full.tuples.begin(), full.tuples.end(), easy.tuples.begin(),
            easy.tuples.end(),
            std::inserter(s.hard_answers.tuples, s.hard_answers.tuples.end()));
        if (s.hard_answers.tuples.empty()) continue;
        for (std::size_t i = 0; i < k; ++i) {
            auto fp = free_var_projection(full, i);
            auto ep = free_var_projection(easy, i);
            std::set<EntityId> m;
            std::set_difference(fp.begin(), fp.end(), ep.begin(), ep.end(),
                                std::inserter(m, m.end()));
            s.marginal_hard.push_back(std::move(m));
        }
        return s;
    }
    return std::nullopt;
}

}  // namespace

SampleRun sample_dataset(const std::vector<AbstractQueryGraph>& types,
                         const KgPair& kgs, const SampleConfig& cfg) {
    struct Task {
        std::size_t type;
        int index;
    };
    std::vector<PositiveSplit> splits;
    std::vector<std::string> ids;
    std::vector<Task> tasks;
    for (std::size_t ti = 0; ti < types.size(); ++ti) {
        splits.push_back(split_positive_subgraph(types[ti]));
        ids.push_back(format_formula_id(ti));
        bool has_neg = !splits.back().negative_edges.empty();
        int target = has_neg ? cfg.num_negative_type : cfg.num_positive_type;
        for (int si = 0; si < target; ++si) tasks.push_back({ti, si});
    }

    std::vector<std::optional<GroundedSample>> results(tasks.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            try {
                results[i] =
                    try_sample(types[tasks[i].type], splits[tasks[i].type],
                               ids[tasks[i].type], tasks[i].index, kgs, cfg);
            } catch (...) {
                std::lock_guard lock(failure_mu);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };
    int workers = std::max(1, cfg.workers);
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    SampleRun run;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (results[i])
            run.samples.push_back(std::move(*results[i]));
        else
            ++run.shortfall[ids[tasks[i].type]];
    }
    return run;
}

std::string sample_to_json(const GroundedSample& s) {
    json j = json::parse(grounded_to_json(s.query));
    j["formula_id"] = s.formula_id;
    j["sample_index"] = s.sample_index;
    auto tuples = [](const AnswerSet& a) {
        json arr = json::array();
        for (const auto& t : a.tuples) arr.push_back(t);
        return arr;
    };
    j["easy_answers"] = tuples(s.easy_answers);
    j["hard_answers"] = tuples(s.hard_answers);
    json marg = json::array();
    for (const auto& m : s.marginal_hard) marg.push_back(m);
    j["marginal_hard"] = marg;
    return j.dump();
}

GroundedSample sample_from_json(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& ex) {
        throw SchemaError(std::string("bad sample JSON: ") + ex.what());
    }
    if (!j.is_object() || !j.contains("formula_id") ||
        !j["formula_id"].is_string() || !j.contains("sample_index") ||
        !j["sample_index"].is_number_integer() ||
        j["sample_index"].get<std::int64_t>() < 0)
        throw SchemaError("sample needs formula_id and sample_index");
    for (const char* key : {"easy_answers", "hard_answers", "marginal_hard"})
        if (!j.contains(key) || !j[key].is_array())
            throw SchemaError(std::string("sample needs array field ") + key);

    GroundedSample s;
    s.formula_id = j["formula_id"].get<std::string>();
    s.sample_index = j["sample_index"].get<int>();
    json q{{"edges", j.value("edges", json())},
           {"free_vars", j.value("free_vars", json())}};
    s.query = grounded_from_json(q.dump());

    std::size_t k = s.query.free_vars.size();
    auto read_tuples = [&](const json& arr, AnswerSet& out) {
        out.k = k;
        for (const auto& t : arr) {
            if (!t.is_array() || t.size() != k)
                throw SchemaError("answer tuple arity mismatch");
            AnswerTuple tuple;
            for (const auto& v : t) {
                if (!v.is_number_unsigned())
                    throw SchemaError("answer entries must be entity ids");
                tuple.push_back(v.get<EntityId>());
            }
            out.tuples.insert(std::move(tuple));
        }
    };
    read_tuples(j["easy_answers"], s.easy_answers);
    read_tuples(j["hard_answers"], s.hard_answers);
    if (j["marginal_hard"].size() != k)
        throw SchemaError("marginal_hard must list one set per free variable");
    for (const auto& m : j["marginal_hard"]) {
        if (!m.is_array()) throw SchemaError("marginal_hard entries are arrays");
        std::set<EntityId> set;
        for (const auto& v : m) {
            if (!v.is_number_unsigned())
                throw SchemaError("marginal entries must be entity ids");
            set.insert(v.get<EntityId>());
        }
        s.marginal_hard.push_back(std::move(set));
    }
    return s;
}

}  // namespace efoq
