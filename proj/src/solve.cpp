#include "efoq/solve.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <numeric>

#include "efoq/error.hpp"

namespace efoq {

namespace {

std::vector<EntityId> full_domain(std::uint32_t num_entities) {
    std::vector<EntityId> d(num_entities);
    std::iota(d.begin(), d.end(), 0);
    return d;
}

std::vector<EntityId> intersect(const std::vector<EntityId>& a,
                                const std::vector<EntityId>& b) {
    std::vector<EntityId> out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                          std::back_inserter(out));
    return out;
}

std::vector<EntityId> subtract(const std::vector<EntityId>& a,
                               const std::vector<EntityId>& b) {
    std::vector<EntityId> out;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(out));
    return out;
}

void check_query(const GroundedQueryGraph& q, const KnowledgeGraph& kg) {
    std::set<int> vars;
    for (const GroundedEdge& e : q.edges) {
        if (e.r >= kg.num_relations())
            throw ContractError("relation id out of range for this graph");
        for (const Term& term : {e.h, e.t}) {
            if (term.is_const) {
                if (term.id >= kg.num_entities())
                    throw ContractError("constant entity id out of range");
            } else {
                vars.insert(static_cast<int>(term.id));
            }
        }
    }
    for (int f : q.free_vars)
        if (!vars.contains(f))
            throw ContractError("free variable appears in no edge");
}

bool edge_ok(const KnowledgeGraph& kg, EntityId a, RelationId r, EntityId b,
             bool neg) {
    return kg.has(a, r, b) != neg;
}

bool sorted_meet(const std::vector<EntityId>& a,
                 const std::vector<EntityId>& b) {
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (*ia < *ib)
            ++ia;
        else if (*ib < *ia)
            ++ib;
        else
            return true;
    }
    return false;
}

}  // namespace

ConstraintNetwork build_network(const GroundedQueryGraph& q,
                                const KnowledgeGraph& kg) {
    check_query(q, kg);

    ConstraintNetwork net;
    net.kg = &kg;
    net.edges = q.edges;
    net.free_vars = q.free_vars;
    net.num_entities = kg.num_entities();
    net.num_relations = kg.num_relations();

    for (int v : q.variable_ids())
        net.domains[v] = full_domain(kg.num_entities());

    for (const GroundedEdge& e : q.edges) {
        if (e.h.is_const == e.t.is_const) continue;
        // Normalize so the variable sits on the tail side of some relation.
        int var = e.h.is_const ? static_cast<int>(e.t.id)
                               : static_cast<int>(e.h.id);
        EntityId c = e.h.is_const ? e.h.id : e.t.id;
        RelationId r = e.h.is_const ? e.r : inverse(e.r);
        const std::vector<EntityId>& image = kg.tails(c, r);
        std::vector<EntityId>& dom = net.domains.at(var);
        dom = e.neg ? subtract(dom, image) : intersect(dom, image);
    }

    for (const auto& [var, dom] : net.domains)
        if (dom.empty()) net.wiped = true;
    return net;
}

void propagate(ConstraintNetwork& net, SolveStats* stats) {
    if (net.wiped || net.kg == nullptr) return;
    const KnowledgeGraph& kg = *net.kg;

    // Directed arcs over positive variable-variable edges; arc.head says
    // which endpoint gets revised.
    struct Arc {
        std::size_t edge;
        bool head;
    };
    auto is_var_arc = [&](const GroundedEdge& e) {
        return !e.neg && !e.h.is_const && !e.t.is_const;
    };
    std::vector<Arc> queue;
    for (std::size_t i = 0; i < net.edges.size(); ++i)
        if (is_var_arc(net.edges[i])) {
            queue.push_back({i, true});
            queue.push_back({i, false});
        }

    while (!queue.empty()) {
        Arc arc = queue.back();
        queue.pop_back();
        const GroundedEdge& e = net.edges[arc.edge];
        int target = static_cast<int>(arc.head ? e.h.id : e.t.id);
        int other = static_cast<int>(arc.head ? e.t.id : e.h.id);
        RelationId r = arc.head ? e.r : inverse(e.r);
        std::vector<EntityId>& dom = net.domains.at(target);
        const std::vector<EntityId>& support = net.domains.at(other);

        std::vector<EntityId> kept;
        kept.reserve(dom.size());
        for (EntityId a : dom)
            if (sorted_meet(kg.tails(a, r), support)) kept.push_back(a);

        if (kept.size() == dom.size()) continue;
        if (stats) ++stats->propagation_revisions;
        dom = std::move(kept);
        if (dom.empty()) {
            net.wiped = true;
            return;
        }
        for (std::size_t i = 0; i < net.edges.size(); ++i) {
            if (i == arc.edge || !is_var_arc(net.edges[i])) continue;
            const GroundedEdge& n = net.edges[i];
            if (static_cast<int>(n.t.id) == target) queue.push_back({i, true});
            if (static_cast<int>(n.h.id) == target) queue.push_back({i, false});
        }
    }
}

namespace {

// Search state shared by the free-variable sweep and the per-component
// existential decision procedure.
struct Searcher {
    const ConstraintNetwork& net;
    const KnowledgeGraph& kg;
    SolveStats* stats;
    std::map<int, EntityId> value;

    explicit Searcher(const ConstraintNetwork& n, SolveStats* s)
        : net(n), kg(*n.kg), stats(s) {}

    void count_node() {
        if (stats) ++stats->backtrack_nodes;
    }

    // Checks every edge incident to var whose other endpoint is already
    // fixed (constant or assigned variable).
    bool consistent_at(int var) const {
        for (const GroundedEdge& e : net.edges) {
            bool h_is = !e.h.is_const && static_cast<int>(e.h.id) == var;
            bool t_is = !e.t.is_const && static_cast<int>(e.t.id) == var;
            if (!h_is && !t_is) continue;

            auto fixed = [&](const Term& term, EntityId& out) {
                if (term.is_const) {
                    out = term.id;
                    return true;
                }
                auto it = value.find(static_cast<int>(term.id));
                if (it == value.end()) return false;
                out = it->second;
                return true;
            };
            EntityId a, b;
            if (!fixed(e.h, a) || !fixed(e.t, b)) continue;
            if (!edge_ok(kg, a, e.r, b, e.neg)) return false;
        }
        return true;
    }
};

int constraint_degree(const ConstraintNetwork& net, int var) {
    int d = 0;
    for (const GroundedEdge& e : net.edges) {
        if (!e.h.is_const && static_cast<int>(e.h.id) == var) ++d;
        if (!e.t.is_const && static_cast<int>(e.t.id) == var) ++d;
    }
    return d;
}

std::vector<int> by_descending_degree(const ConstraintNetwork& net,
                                      std::vector<int> vars) {
    std::stable_sort(vars.begin(), vars.end(), [&](int a, int b) {
        int da = constraint_degree(net, a), db = constraint_degree(net, b);
        if (da != db) return da > db;
        return a < b;
    });
    return vars;
}

struct ExistComponent {
    std::vector<int> members;        // existential vars, search order
    std::vector<int> boundary;      // adjacent free vars, ascending
    std::map<std::vector<EntityId>, bool> memo;
};

}  // namespace

AnswerSet solve_efo(const GroundedQueryGraph& q, const KnowledgeGraph& kg,
                    SolveStats* stats) {
    auto started = std::chrono::steady_clock::now();
    AnswerSet out;
    out.k = q.free_vars.size();

    ConstraintNetwork net = build_network(q, kg);
    propagate(net, stats);

    auto finish = [&]() -> AnswerSet {
        if (stats)
            stats->wall_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                              started)
                    .count();
        return out;
    };
    if (net.wiped) return finish();

    std::set<int> free_set(q.free_vars.begin(), q.free_vars.end());
    std::vector<int> exist_vars;
    for (const auto& [v, dom] : net.domains)
        if (!free_set.contains(v)) exist_vars.push_back(v);

    // Existential components: connected through edges joining two
    // existential variables. Each is decided independently per boundary
    // assignment, with the verdict memoized.
    std::map<int, int> comp_of;
    {
        std::map<int, int> parent;
        for (int v : exist_vars) parent[v] = v;
        std::function<int(int)> find = [&](int x) {
            while (parent[x] != x) x = parent[x] = parent[parent[x]];
            return x;
        };
        for (const GroundedEdge& e : net.edges) {
            if (e.h.is_const || e.t.is_const) continue;
            int hu = static_cast<int>(e.h.id), tv = static_cast<int>(e.t.id);
            if (!free_set.contains(hu) && !free_set.contains(tv))
                parent[find(hu)] = find(tv);
        }
        for (int v : exist_vars) comp_of[v] = find(v);
    }
    std::map<int, ExistComponent> components;
    for (int v : exist_vars) components[comp_of[v]].members.push_back(v);
    for (auto& [root, comp] : components) {
        comp.members = by_descending_degree(net, comp.members);
        std::set<int> boundary;
        for (const GroundedEdge& e : net.edges) {
            if (e.h.is_const || e.t.is_const) continue;
            int hu = static_cast<int>(e.h.id), tv = static_cast<int>(e.t.id);
            if (comp_of.count(hu) && comp_of[hu] == root && free_set.contains(tv))
                boundary.insert(tv);
            if (comp_of.count(tv) && comp_of[tv] == root && free_set.contains(hu))
                boundary.insert(hu);
        }
        comp.boundary.assign(boundary.begin(), boundary.end());
    }

    Searcher searcher(net, stats);

    std::function<bool(ExistComponent&, std::size_t)> satisfy_from =
        [&](ExistComponent& comp, std::size_t depth) -> bool {
        if (depth == comp.members.size()) return true;
        int var = comp.members[depth];
        for (EntityId a : net.domains.at(var)) {
            searcher.count_node();
            searcher.value[var] = a;
            if (searcher.consistent_at(var) && satisfy_from(comp, depth + 1)) {
                searcher.value.erase(var);
                return true;
            }
            searcher.value.erase(var);
        }
        return false;
    };

    auto satisfiable = [&](ExistComponent& comp) {
        std::vector<EntityId> key;
        key.reserve(comp.boundary.size());
        for (int f : comp.boundary) key.push_back(searcher.value.at(f));
        auto it = comp.memo.find(key);
        if (it != comp.memo.end()) return it->second;
        bool verdict = satisfy_from(comp, 0);
        comp.memo.emplace(std::move(key), verdict);
        return verdict;
    };

    std::vector<int> free_order = by_descending_degree(net, q.free_vars);

    std::function<void(std::size_t)> sweep = [&](std::size_t depth) {
        if (depth == free_order.size()) {
            for (auto& [root, comp] : components)
                if (!satisfiable(comp)) return;
            AnswerTuple tuple;
            tuple.reserve(q.free_vars.size());
            for (int f : q.free_vars) tuple.push_back(searcher.value.at(f));
            out.tuples.insert(std::move(tuple));
            return;
        }
        int var = free_order[depth];
        for (EntityId a : net.domains.at(var)) {
            searcher.count_node();
            searcher.value[var] = a;
            // Only edges among already-assigned free variables can be
            // decided here; existential edges wait for the components.
            bool ok = true;
            for (const GroundedEdge& e : net.edges) {
                auto val_if_fixed_free = [&](const Term& t, EntityId& v) {
                    if (t.is_const) {
                        v = t.id;
                        return true;
                    }
                    int id = static_cast<int>(t.id);
                    if (!free_set.contains(id)) return false;
                    auto it = searcher.value.find(id);
                    if (it == searcher.value.end()) return false;
                    v = it->second;
                    return true;
                };
                bool involves =
                    (!e.h.is_const && static_cast<int>(e.h.id) == var) ||
                    (!e.t.is_const && static_cast<int>(e.t.id) == var);
                if (!involves) continue;
                EntityId a2, b2;
                if (val_if_fixed_free(e.h, a2) && val_if_fixed_free(e.t, b2) &&
                    !edge_ok(kg, a2, e.r, b2, e.neg)) {
                    ok = false;
                    break;
                }
            }
            if (ok) sweep(depth + 1);
            searcher.value.erase(var);
        }
    };
    sweep(0);

    return finish();
}

CspSolutions solve_csp(const GroundedQueryGraph& q, const KnowledgeGraph& kg,
                       std::uint64_t cap) {
    ConstraintNetwork net = build_network(q, kg);
    propagate(net);

    CspSolutions out;
    for (const auto& [v, dom] : net.domains) out.var_ids.push_back(v);
    if (net.wiped) return out;

    long double product = 1;
    for (const auto& [v, dom] : net.domains) product *= dom.size();
    if (product > static_cast<long double>(cap))
        throw ResourceError("assignment space exceeds the materialization cap");

    Searcher searcher(net, nullptr);
    std::function<void(std::size_t)> sweep = [&](std::size_t depth) {
        if (depth == out.var_ids.size()) {
            std::vector<EntityId> row;
            row.reserve(out.var_ids.size());
            for (int v : out.var_ids) row.push_back(searcher.value.at(v));
            out.rows.insert(std::move(row));
            return;
        }
        int var = out.var_ids[depth];
        for (EntityId a : net.domains.at(var)) {
            searcher.value[var] = a;
            if (searcher.consistent_at(var)) sweep(depth + 1);
            searcher.value.erase(var);
        }
    };
    sweep(0);
    return out;
}

AnswerSet brute_force_oracle(const GroundedQueryGraph& q,
                             const KnowledgeGraph& kg, std::uint64_t cap) {
    check_query(q, kg);
    AnswerSet out;
    out.k = q.free_vars.size();

    std::vector<int> vars = q.variable_ids();
    std::uint64_t total = 1;
    for (std::size_t i = 0; i < vars.size(); ++i) {
        if (kg.num_entities() != 0 && total > cap / kg.num_entities())
            throw ResourceError("oracle assignment space exceeds its cap");
        total *= kg.num_entities();
    }
    if (kg.num_entities() == 0) return out;

    std::map<int, EntityId> value;
    std::vector<EntityId> counter(vars.size(), 0);
    for (;;) {
        for (std::size_t i = 0; i < vars.size(); ++i) value[vars[i]] = counter[i];
        bool all_ok = true;
        for (const GroundedEdge& e : q.edges) {
            EntityId a = e.h.is_const ? e.h.id : value.at(static_cast<int>(e.h.id));
            EntityId b = e.t.is_const ? e.t.id : value.at(static_cast<int>(e.t.id));
            if (!edge_ok(kg, a, e.r, b, e.neg)) {
                all_ok = false;
                break;
            }
        }
        if (all_ok) {
            AnswerTuple tuple;
            tuple.reserve(q.free_vars.size());
            for (int f : q.free_vars) tuple.push_back(value.at(f));
            out.tuples.insert(std::move(tuple));
        }
        std::size_t i = vars.size();
        while (i > 0) {
            --i;
            if (++counter[i] < kg.num_entities()) break;
            counter[i] = 0;
            if (i == 0) return out;
        }
        if (vars.empty()) return out;
    }
}

}  // namespace efoq
