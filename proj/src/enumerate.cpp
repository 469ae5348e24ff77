#include "efoq/enumerate.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <numeric>
#include <set>

#include "efoq/error.hpp"

namespace efoq {

NegationProfile profile_from_name(const std::string& name) {
    if (name == "reference") return NegationProfile::Reference;
    if (name == "exhaustive") return NegationProfile::Exhaustive;
    if (name == "unfiltered") return NegationProfile::Unfiltered;
    throw SchemaError("unknown profile: " + name);
}

const char* profile_name(NegationProfile p) {
    switch (p) {
        case NegationProfile::Reference: return "reference";
        case NegationProfile::Exhaustive: return "exhaustive";
        case NegationProfile::Unfiltered: return "unfiltered";
    }
    throw ContractError("invalid profile value");
}

namespace {

using Pair = std::pair<int, int>;

// All size-k subsets of 0..n-1, emitted in lexicographic order.
void for_each_combination(int n, int k,
                          const std::function<void(const std::vector<int>&)>& fn) {
    if (k > n || k < 0) return;
    std::vector<int> idx(k);
    std::iota(idx.begin(), idx.end(), 0);
    for (;;) {
        fn(idx);
        int i = k - 1;
        while (i >= 0 && idx[i] == n - k + i) --i;
        if (i < 0) return;
        ++idx[i];
        for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
}

// All size-k multisets over 0..n-1 (nondecreasing index tuples).
void for_each_multiset(int n, int k,
                       const std::function<void(const std::vector<int>&)>& fn) {
    if (n <= 0 && k > 0) return;
    std::vector<int> idx(k, 0);
    for (;;) {
        fn(idx);
        int i = k - 1;
        while (i >= 0 && idx[i] == n - 1) --i;
        if (i < 0) return;
        ++idx[i];
        for (int j = i + 1; j < k; ++j) idx[j] = idx[i];
    }
}

bool is_connected(int v, const std::vector<Pair>& edges) {
    if (v == 0) return false;
    std::vector<std::vector<int>> adj(v);
    for (const Pair& e : edges) {
        adj[e.first].push_back(e.second);
        adj[e.second].push_back(e.first);
    }
    std::vector<bool> seen(v, false);
    std::deque<int> dq{0};
    seen[0] = true;
    int reached = 1;
    while (!dq.empty()) {
        int u = dq.front();
        dq.pop_front();
        for (int w : adj[u])
            if (!seen[w]) {
                seen[w] = true;
                ++reached;
                dq.push_back(w);
            }
    }
    return reached == v;
}

bool within_free_distance(const AbstractQueryGraph& g, int max_dist) {
    int n = g.num_nodes();
    std::vector<std::vector<int>> adj(n);
    for (const AbstractEdge& e : g.edges) {
        adj[e.u].push_back(e.v);
        adj[e.v].push_back(e.u);
    }
    std::vector<int> dist(n, -1);
    std::deque<int> dq;
    for (int i = 0; i < n; ++i)
        if (g.kinds[i] == NodeKind::Free) {
            dist[i] = 0;
            dq.push_back(i);
        }
    while (!dq.empty()) {
        int u = dq.front();
        dq.pop_front();
        for (int w : adj[u])
            if (dist[w] < 0) {
                dist[w] = dist[u] + 1;
                dq.push_back(w);
            }
    }
    for (int d : dist)
        if (d < 0 || d > max_dist) return false;
    return true;
}

// An existential with a single incident edge must lean on a free variable or
// on a node that carries its own constant; otherwise the whole branch hangs
// off unanchored existentials and the type is pruned.
bool passes_leaf_rule(const AbstractQueryGraph& g) {
    int n = g.num_nodes();
    std::vector<int> degree(n, 0), const_load(n, 0);
    std::vector<int> sole_neighbor(n, -1);
    for (const AbstractEdge& e : g.edges) {
        ++degree[e.u];
        ++degree[e.v];
        sole_neighbor[e.u] = e.v;
        sole_neighbor[e.v] = e.u;
        if (g.kinds[e.u] == NodeKind::Constant) ++const_load[e.v];
        if (g.kinds[e.v] == NodeKind::Constant) ++const_load[e.u];
    }
    for (int i = 0; i < n; ++i) {
        if (g.kinds[i] != NodeKind::Existential || degree[i] != 1) continue;
        int nb = sole_neighbor[i];
        if (g.kinds[nb] != NodeKind::Free && const_load[nb] == 0) return false;
    }
    return true;
}

// Slots are distinct undirected endpoint pairs; negating a slot flips one
// copy of that pair.
std::vector<Pair> distinct_slots(const AbstractQueryGraph& g) {
    std::set<Pair> seen;
    std::vector<Pair> out;
    for (const AbstractEdge& e : g.edges) {
        auto [lo, hi] = std::minmax(e.u, e.v);
        if (seen.insert({lo, hi}).second) out.push_back({lo, hi});
    }
    return out;
}

// Legal negation slots of an all-positive skeleton. A constant edge may flip
// when its variable either keeps a second constant edge or is held by enough
// positive variable neighbors; a variable edge may flip when it is parallel,
// on a cycle, or a bridge whose both sides still contain a constant.
std::vector<Pair> legal_negation_slots(const AbstractQueryGraph& g) {
    int n = g.num_nodes();
    std::vector<std::vector<int>> adj(n);
    std::map<Pair, int> pair_count;
    for (const AbstractEdge& e : g.edges) {
        adj[e.u].push_back(e.v);
        adj[e.v].push_back(e.u);
        auto [lo, hi] = std::minmax(e.u, e.v);
        ++pair_count[{lo, hi}];
    }
    auto is_var = [&](int i) { return g.kinds[i] != NodeKind::Constant; };

    std::vector<Pair> out;
    for (const Pair& slot : distinct_slots(g)) {
        auto [a, b] = slot;
        if ((is_var(a) && adj[a].size() == 1) || (is_var(b) && adj[b].size() == 1))
            continue;

        if (!is_var(a) || !is_var(b)) {
            int vv = is_var(a) ? a : b;
            int spare = 0;
            std::set<int> var_neighbors;
            int free_neighbors = 0;
            for (int w : adj[vv]) {
                if (!is_var(w)) {
                    ++spare;
                } else if (var_neighbors.insert(w).second &&
                           g.kinds[w] == NodeKind::Free) {
                    ++free_neighbors;
                }
            }
            bool held = static_cast<int>(var_neighbors.size()) >= 2 &&
                        free_neighbors >=
                            (g.kinds[vv] == NodeKind::Free ? 1 : 2);
            if (spare >= 2 || held) out.push_back(slot);
            continue;
        }

        if (pair_count[slot] > 1) {
            out.push_back(slot);
            continue;
        }
        std::vector<std::vector<int>> residual(n);
        bool removed_one = false;
        for (const AbstractEdge& e : g.edges) {
            if (!removed_one && ((e.u == a && e.v == b) || (e.u == b && e.v == a))) {
                removed_one = true;
                continue;
            }
            residual[e.u].push_back(e.v);
            residual[e.v].push_back(e.u);
        }
        std::vector<bool> seen(n, false);
        std::deque<int> dq{a};
        seen[a] = true;
        while (!dq.empty()) {
            int u = dq.front();
            dq.pop_front();
            for (int w : residual[u])
                if (!seen[w]) {
                    seen[w] = true;
                    dq.push_back(w);
                }
        }
        if (seen[b]) {
            out.push_back(slot);
            continue;
        }
        bool side_a = false, side_b = false;
        for (int i = 0; i < n; ++i)
            if (!is_var(i)) (seen[i] ? side_a : side_b) = true;
        if (side_a && side_b) out.push_back(slot);
    }
    return out;
}

AbstractQueryGraph negate_slots(const AbstractQueryGraph& g,
                                const std::vector<Pair>& slots) {
    AbstractQueryGraph out = g;
    for (const Pair& slot : slots)
        for (AbstractEdge& e : out.edges) {
            auto [lo, hi] = std::minmax(e.u, e.v);
            if (Pair{lo, hi} == slot && !e.neg) {
                e.neg = true;
                break;
            }
        }
    return out;
}

}  // namespace

bool check_no_redundancy(const AbstractQueryGraph& g) {
    int n = g.num_nodes();
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const AbstractEdge& e : g.edges) {
        bool cu = g.kinds[e.u] == NodeKind::Constant;
        bool cv = g.kinds[e.v] == NodeKind::Constant;
        if (cu && cv) return false;
        if (!cu && !cv) parent[find(e.u)] = find(e.v);
    }
    std::map<int, bool> component_has_free;
    for (int i = 0; i < n; ++i) {
        if (g.kinds[i] == NodeKind::Constant) continue;
        bool& has_free = component_has_free[find(i)];
        has_free = has_free || g.kinds[i] == NodeKind::Free;
    }
    for (const auto& [root, has_free] : component_has_free)
        if (!has_free) return false;
    return true;
}

bool check_no_decomposition(const AbstractQueryGraph& g) {
    int n = g.num_nodes();
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const AbstractEdge& e : g.edges)
        if (g.kinds[e.u] != NodeKind::Constant &&
            g.kinds[e.v] != NodeKind::Constant)
            parent[find(e.u)] = find(e.v);
    std::set<int> roots;
    for (int i = 0; i < n; ++i)
        if (g.kinds[i] != NodeKind::Constant) roots.insert(find(i));
    return roots.size() == 1;
}

bool check_negation_placement(const AbstractQueryGraph& g) {
    int n = g.num_nodes();
    std::vector<int> positive_degree(n, 0);
    for (const AbstractEdge& e : g.edges)
        if (!e.neg) {
            ++positive_degree[e.u];
            ++positive_degree[e.v];
        }
    for (int i = 0; i < n; ++i)
        if (g.kinds[i] != NodeKind::Constant && positive_degree[i] == 0)
            return false;
    return true;
}

TypeCell cell_of(const AbstractQueryGraph& g) {
    return {g.count_kind(NodeKind::Free), g.count_kind(NodeKind::Constant),
            g.count_kind(NodeKind::Existential), classify_topology(g)};
}

std::vector<AbstractQueryGraph> enumerate_abstract(const EnumBudget& budget,
                                                   NegationProfile profile) {
    std::map<std::string, AbstractQueryGraph> by_canon;

    auto admit = [&](const AbstractQueryGraph& g) {
        std::string canon = canonical_form(g);
        by_canon.emplace(std::move(canon), g);
    };

    // Negation variants of one positive skeleton under the active profile.
    auto expand_negations = [&](const AbstractQueryGraph& skeleton) {
        if (budget.max_neg_edges < 1) return;
        std::vector<Pair> candidates;
        if (profile == NegationProfile::Unfiltered) {
            candidates = distinct_slots(skeleton);
        } else {
            candidates = legal_negation_slots(skeleton);
        }
        if (candidates.empty()) return;

        if (profile == NegationProfile::Reference) {
            std::string best_canon;
            AbstractQueryGraph best;
            for (const Pair& slot : candidates) {
                AbstractQueryGraph variant = negate_slots(skeleton, {slot});
                std::string canon = canonical_form(variant);
                if (best_canon.empty() || canon < best_canon) {
                    best_canon = std::move(canon);
                    best = std::move(variant);
                }
            }
            by_canon.emplace(std::move(best_canon), best);
            return;
        }

        int max_flip = std::min<int>(budget.max_neg_edges,
                                     static_cast<int>(candidates.size()));
        for (int m = 1; m <= max_flip; ++m) {
            for_each_combination(
                static_cast<int>(candidates.size()), m,
                [&](const std::vector<int>& pick) {
                    std::vector<Pair> slots;
                    for (int i : pick) slots.push_back(candidates[i]);
                    AbstractQueryGraph variant = negate_slots(skeleton, slots);
                    if (!check_negation_placement(variant)) return;
                    admit(variant);
                });
        }
    };

    for (int k = 1; k <= budget.max_free; ++k) {
        for (int e = 0; e <= budget.max_exist; ++e) {
            int v = k + e;
            if (v + 1 > budget.max_nodes) continue;

            std::vector<Pair> all_pairs;
            for (int i = 0; i < v; ++i)
                for (int j = i + 1; j < v; ++j) all_pairs.push_back({i, j});

            int max_var_edges = std::min(
                {static_cast<int>(all_pairs.size()), v + budget.max_extra_edges,
                 budget.max_edges - 1});
            for (int s = std::max(0, v - 1); s <= max_var_edges; ++s) {
                for_each_combination(
                    static_cast<int>(all_pairs.size()), s,
                    [&](const std::vector<int>& pick) {
                        std::vector<Pair> simple;
                        for (int i : pick) simple.push_back(all_pairs[i]);
                        if (!is_connected(v, simple)) return;

                        int max_dup = v + budget.max_extra_edges - s;
                        for (int d = 0; d <= max_dup; ++d) {
                            for_each_multiset(s, d, [&](const std::vector<int>& dup) {
                                std::vector<Pair> var_edges = simple;
                                for (int i : dup) var_edges.push_back(simple[i]);

                                for (int c = 1; c <= budget.max_const; ++c) {
                                    if (v + c > budget.max_nodes) continue;
                                    if (s + d + c > budget.max_edges) continue;
                                    for_each_multiset(v, c, [&](const std::vector<int>& attach) {
                                        AbstractQueryGraph g;
                                        for (int i = 0; i < k; ++i)
                                            g.kinds.push_back(NodeKind::Free);
                                        for (int i = 0; i < e; ++i)
                                            g.kinds.push_back(NodeKind::Existential);
                                        for (int i = 0; i < c; ++i)
                                            g.kinds.push_back(NodeKind::Constant);
                                        for (const Pair& p : var_edges)
                                            g.edges.push_back({p.first, p.second, false});
                                        for (int i = 0; i < c; ++i)
                                            g.edges.push_back({attach[i], v + i, false});

                                        if (!within_free_distance(g, budget.max_dist_to_free))
                                            return;
                                        if (profile != NegationProfile::Unfiltered &&
                                            !passes_leaf_rule(g))
                                            return;

                                        std::string canon = canonical_form(g);
                                        if (by_canon.contains(canon)) return;
                                        by_canon.emplace(std::move(canon), g);
                                        expand_negations(g);
                                    });
                                }
                            });
                        }
                    });
            }
        }
    }

    std::vector<std::pair<std::string, AbstractQueryGraph>> keyed;
    keyed.reserve(by_canon.size());
    for (auto& [canon, g] : by_canon) keyed.emplace_back(canon, std::move(g));
    std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
        auto key = [](const auto& p) {
            return std::tuple(p.second.num_nodes(),
                              static_cast<int>(p.second.edges.size()), p.first);
        };
        return key(a) < key(b);
    });

    std::vector<AbstractQueryGraph> out;
    out.reserve(keyed.size());
    for (auto& [canon, g] : keyed) out.push_back(std::move(g));
    return out;
}

}  // namespace efoq
