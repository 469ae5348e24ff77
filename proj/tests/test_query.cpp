#include "doctest.h"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <vector>

#include "efoq/error.hpp"
#include "efoq/query.hpp"
#include "efoq/rng.hpp"

using namespace efoq;

namespace {

using K = NodeKind;

AbstractQueryGraph make(std::vector<K> kinds,
                        std::vector<std::array<int, 3>> edges) {
    AbstractQueryGraph g;
    g.kinds = std::move(kinds);
    for (const auto& [u, v, neg] : edges) g.edges.push_back({u, v, neg != 0});
    return g;
}

// Independent oracle: exhaustive search over all kind-preserving node
// bijections, comparing polarity-tagged edge multisets.
bool iso_oracle(const AbstractQueryGraph& a, const AbstractQueryGraph& b) {
    if (a.kinds.size() != b.kinds.size() || a.edges.size() != b.edges.size())
        return false;
    int n = a.num_nodes();
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);

    std::multiset<std::tuple<int, int, bool>> eb;
    for (const AbstractEdge& e : b.edges) {
        auto [lo, hi] = std::minmax(e.u, e.v);
        eb.insert({lo, hi, e.neg});
    }
    do {
        bool kinds_ok = true;
        for (int i = 0; i < n && kinds_ok; ++i)
            if (a.kinds[i] != b.kinds[perm[i]]) kinds_ok = false;
        if (!kinds_ok) continue;
        std::multiset<std::tuple<int, int, bool>> ea;
        for (const AbstractEdge& e : a.edges) {
            auto [lo, hi] = std::minmax(perm[e.u], perm[e.v]);
            ea.insert({lo, hi, e.neg});
        }
        if (ea == eb) return true;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return false;
}

AbstractQueryGraph relabel(const AbstractQueryGraph& g,
                           const std::vector<int>& perm, Rng& rng) {
    AbstractQueryGraph out;
    out.kinds.resize(g.kinds.size());
    for (int i = 0; i < g.num_nodes(); ++i) out.kinds[perm[i]] = g.kinds[i];
    for (const AbstractEdge& e : g.edges) {
        if (rng.below(2))
            out.edges.push_back({perm[e.u], perm[e.v], e.neg});
        else
            out.edges.push_back({perm[e.v], perm[e.u], e.neg});
    }
    for (std::size_t i = out.edges.size(); i > 1; --i)
        std::swap(out.edges[i - 1], out.edges[rng.below(i)]);
    return out;
}

AbstractQueryGraph random_graph(Rng& rng, bool keep_topology_clean) {
    int n = 2 + static_cast<int>(rng.below(5));
    AbstractQueryGraph g;
    for (int i = 0; i < n; ++i)
        g.kinds.push_back(static_cast<K>(rng.below(3)));
    g.kinds[rng.below(n)] = K::Free;

    for (int i = 1; i < n; ++i)
        g.edges.push_back({static_cast<int>(rng.below(i)), i, rng.below(4) == 0});
    if (rng.below(2) && n >= 2) {
        if (keep_topology_clean || rng.below(2)) {
            const AbstractEdge& dup = g.edges[rng.below(g.edges.size())];
            g.edges.push_back({dup.u, dup.v, false});
        } else {
            int u = static_cast<int>(rng.below(n));
            int v = static_cast<int>(rng.below(n));
            if (u != v) g.edges.push_back({u, v, false});
        }
    }
    return g;
}

}  // namespace

TEST_CASE("topology of the three reference shapes") {
    auto path = make({K::Constant, K::Existential, K::Free},
                     {{0, 1, 0}, {1, 2, 0}});
    CHECK(classify_topology(path) == Topology::SDAG);

    auto multi = make({K::Constant, K::Existential, K::Free},
                      {{0, 1, 0}, {0, 1, 0}, {1, 2, 0}});
    CHECK(classify_topology(multi) == Topology::Multi);

    auto cyc = make({K::Constant, K::Existential, K::Free, K::Existential},
                    {{0, 1, 0}, {1, 2, 0}, {2, 3, 0}, {3, 0, 0}});
    CHECK(classify_topology(cyc) == Topology::Cyclic);

    auto both = make({K::Free, K::Existential, K::Existential},
                     {{0, 1, 0}, {1, 2, 0}, {2, 0, 0}, {0, 1, 0}});
    CHECK_THROWS_AS(classify_topology(both), ContractError);
}

TEST_CASE("canonical form identifies relabeled copies") {
    auto g = make({K::Constant, K::Existential, K::Free}, {{0, 1, 0}, {1, 2, 0}});
    auto h = make({K::Free, K::Constant, K::Existential}, {{1, 2, 0}, {2, 0, 0}});
    CHECK(canonical_form(g) == canonical_form(h));
    CHECK(iso_oracle(g, h));
}

TEST_CASE("canonical form separates kind and polarity differences") {
    auto cxf = make({K::Constant, K::Existential, K::Free}, {{0, 1, 0}, {1, 2, 0}});
    auto cfx = make({K::Constant, K::Free, K::Existential}, {{0, 1, 0}, {1, 2, 0}});
    CHECK(canonical_form(cxf) != canonical_form(cfx));
    CHECK(!iso_oracle(cxf, cfx));

    auto pos = make({K::Constant, K::Free}, {{0, 1, 0}});
    auto neg = make({K::Constant, K::Free}, {{0, 1, 1}});
    CHECK(canonical_form(pos) != canonical_form(neg));
    CHECK(!iso_oracle(pos, neg));
}

TEST_CASE("canonical form is a congruence under relabeling") {
    Rng rng(501);
    for (int round = 0; round < 300; ++round) {
        AbstractQueryGraph g = random_graph(rng, false);
        std::vector<int> perm(g.num_nodes());
        std::iota(perm.begin(), perm.end(), 0);
        for (std::size_t i = perm.size(); i > 1; --i)
            std::swap(perm[i - 1], perm[rng.below(i)]);
        AbstractQueryGraph h = relabel(g, perm, rng);
        REQUIRE(canonical_form(g) == canonical_form(h));
    }
}

TEST_CASE("canonical equality agrees with the isomorphism oracle") {
    Rng rng(502);
    std::vector<AbstractQueryGraph> graphs;
    for (int i = 0; i < 60; ++i) graphs.push_back(random_graph(rng, false));
    for (std::size_t i = 0; i < graphs.size(); ++i)
        for (std::size_t j = i + 1; j < graphs.size(); ++j) {
            bool canon_eq =
                canonical_form(graphs[i]) == canonical_form(graphs[j]);
            REQUIRE(canon_eq == iso_oracle(graphs[i], graphs[j]));
        }
}

TEST_CASE("topology is invariant under isomorphism") {
    Rng rng(503);
    for (int round = 0; round < 200; ++round) {
        AbstractQueryGraph g = random_graph(rng, true);
        std::vector<int> perm(g.num_nodes());
        std::iota(perm.begin(), perm.end(), 0);
        for (std::size_t i = perm.size(); i > 1; --i)
            std::swap(perm[i - 1], perm[rng.below(i)]);
        AbstractQueryGraph h = relabel(g, perm, rng);
        REQUIRE(classify_topology(g) == classify_topology(h));
    }
}

TEST_CASE("validate rejects each invariant breach") {
    CHECK_THROWS_AS(make({K::Free}, {{0, 0, 0}}).validate(), ContractError);
    CHECK_THROWS_AS(
        make({K::Constant, K::Constant, K::Free}, {{0, 1, 0}, {1, 2, 0}})
            .validate(),
        ContractError);
    CHECK_THROWS_AS(
        make({K::Constant, K::Existential}, {{0, 1, 0}}).validate(),
        ContractError);
    CHECK_THROWS_AS(
        make({K::Free, K::Constant, K::Existential, K::Constant},
             {{0, 1, 0}, {2, 3, 0}})
            .validate(),
        ContractError);
    CHECK_THROWS_AS(make({K::Constant, K::Free}, {{0, 1, 1}}).validate(),
                    ContractError);
    CHECK_NOTHROW(
        make({K::Constant, K::Free}, {{0, 1, 0}, {0, 1, 1}}).validate());
}

TEST_CASE("union of answers") {
    AnswerSet a{1, {{1}}};
    AnswerSet b{1, {{2}}};
    CHECK(union_answers({a, b}) == AnswerSet{1, {{1}, {2}}});
    CHECK(union_answers({a, AnswerSet{1, {}}}) == a);
    CHECK(union_answers({a, a, b}) == AnswerSet{1, {{1}, {2}}});
    CHECK_THROWS_AS(union_answers({a, AnswerSet{2, {{1, 2}}}}), ContractError);

    Rng rng(601);
    for (int round = 0; round < 50; ++round) {
        auto random_set = [&]() {
            AnswerSet s{2, {}};
            for (int i = 0; i < 6; ++i)
                s.tuples.insert({static_cast<EntityId>(rng.below(4)),
                                 static_cast<EntityId>(rng.below(4))});
            return s;
        };
        AnswerSet x = random_set(), y = random_set(), z = random_set();
        REQUIRE(union_answers({x, y}) == union_answers({y, x}));
        REQUIRE(union_answers({union_answers({x, y}), z}) ==
                union_answers({x, union_answers({y, z})}));
        REQUIRE(union_answers({x, x}) == x);
    }
}

TEST_CASE("free variable projection") {
    AnswerSet a{2, {{1, 2}, {1, 3}, {4, 2}}};
    CHECK(free_var_projection(a, 0) == std::set<EntityId>{1, 4});
    CHECK(free_var_projection(a, 1) == std::set<EntityId>{2, 3});
    CHECK(free_var_projection(AnswerSet{2, {}}, 1).empty());
    AnswerSet single{1, {{7}, {9}}};
    CHECK(free_var_projection(single, 0) == std::set<EntityId>{7, 9});
    CHECK_THROWS_AS(free_var_projection(a, 2), ContractError);
}

TEST_CASE("abstract graphs round-trip through JSONL") {
    Rng rng(701);
    for (int round = 0; round < 100; ++round) {
        AbstractQueryGraph g = random_graph(rng, true);
        bool valid = true;
        try {
            g.validate();
        } catch (const ContractError&) {
            valid = false;
        }
        if (!valid) continue;
        AbstractQueryGraph back = abstract_from_json(abstract_to_json(g));
        REQUIRE(back == g);
    }
}

TEST_CASE("abstract JSON schema violations fail loudly") {
    CHECK_THROWS_AS(abstract_from_json("not json"), SchemaError);
    CHECK_THROWS_AS(abstract_from_json("{\"nodes\":[]}"), SchemaError);
    CHECK_THROWS_AS(
        abstract_from_json(
            R"({"nodes":[{"id":0,"kind":"ghost"}],"edges":[]})"),
        SchemaError);
    CHECK_THROWS_AS(
        abstract_from_json(
            R"({"nodes":[{"id":1,"kind":"free"}],"edges":[]})"),
        SchemaError);
    CHECK_THROWS_AS(
        abstract_from_json(
            R"({"nodes":[{"id":0,"kind":"free"},{"id":0,"kind":"free"}],"edges":[]})"),
        SchemaError);
    CHECK_THROWS_AS(
        abstract_from_json(
            R"({"nodes":[{"id":0,"kind":"free"},{"id":1,"kind":"constant"}],"edges":[{"u":0,"v":1}]})"),
        SchemaError);
}

TEST_CASE("grounded graphs round-trip through JSONL") {
    GroundedQueryGraph g;
    g.edges.push_back({Term::constant(123), 45, Term::var(2), false});
    g.edges.push_back({Term::var(2), 7, Term::var(3), true});
    g.free_vars = {2};
    GroundedQueryGraph back = grounded_from_json(grounded_to_json(g));
    CHECK(back == g);
    CHECK(g.variable_ids() == std::vector<int>{2, 3});

    CHECK_THROWS_AS(grounded_from_json("{\"edges\":[]}"), SchemaError);
    CHECK_THROWS_AS(
        grounded_from_json(
            R"({"edges":[{"h":{"both":1},"r":0,"t":{"var":1},"neg":false}],"free_vars":[1]})"),
        SchemaError);
    CHECK_THROWS_AS(
        grounded_from_json(
            R"({"edges":[{"h":{"const":1},"r":-2,"t":{"var":1},"neg":false}],"free_vars":[1]})"),
        SchemaError);
    CHECK_THROWS_AS(
        grounded_from_json(
            R"({"edges":[{"h":{"const":1},"r":0,"t":{"var":1},"neg":false}],"free_vars":[3,1]})"),
        SchemaError);
}
