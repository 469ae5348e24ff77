#include "efoq/query.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <numeric>

#include "efoq/error.hpp"
#include "json.hpp"

namespace efoq {

NodeKind node_kind_from_name(const std::string& name) {
    if (name == "constant") return NodeKind::Constant;
    if (name == "existential") return NodeKind::Existential;
    if (name == "free") return NodeKind::Free;
    throw SchemaError("unknown node kind: " + name);
}

const char* node_kind_name(NodeKind kind) {
    switch (kind) {
        case NodeKind::Constant: return "constant";
        case NodeKind::Existential: return "existential";
        case NodeKind::Free: return "free";
    }
    throw ContractError("invalid node kind value");
}

int AbstractQueryGraph::count_kind(NodeKind k) const {
    return static_cast<int>(std::count(kinds.begin(), kinds.end(), k));
}

void AbstractQueryGraph::validate() const {
    int n = num_nodes();
    if (n == 0) throw ContractError("graph has no nodes");
    if (count_kind(NodeKind::Free) == 0)
        throw ContractError("graph has no free node");

    std::vector<int> positive_degree(n, 0);
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    };

    for (const AbstractEdge& e : edges) {
        if (e.u < 0 || e.u >= n || e.v < 0 || e.v >= n)
            throw ContractError("edge endpoint out of range");
        if (e.u == e.v) throw ContractError("self loop");
        if (kinds[e.u] == NodeKind::Constant && kinds[e.v] == NodeKind::Constant)
            throw ContractError("edge joins two constants");
        if (!e.neg) {
            ++positive_degree[e.u];
            ++positive_degree[e.v];
        }
        parent[find(e.u)] = find(e.v);
    }

    for (int i = 0; i < n; ++i) {
        if (find(i) != find(0)) throw ContractError("graph is disconnected");
        if (kinds[i] != NodeKind::Constant && positive_degree[i] == 0)
            throw ContractError("variable node lacks a positive edge");
    }
}

const char* topology_name(Topology t) {
    switch (t) {
        case Topology::SDAG: return "SDAG";
        case Topology::Multi: return "Multi";
        case Topology::Cyclic: return "Cyclic";
    }
    throw ContractError("invalid topology value");
}

Topology classify_topology(const AbstractQueryGraph& g) {
    int n = g.num_nodes();
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    };

    std::set<std::pair<int, int>> simple;
    bool multi = false;
    bool cyclic = false;
    for (const AbstractEdge& e : g.edges) {
        auto pair = std::minmax(e.u, e.v);
        if (!simple.insert(pair).second) {
            multi = true;
            continue;
        }
        int ru = find(pair.first), rv = find(pair.second);
        if (ru == rv)
            cyclic = true;
        else
            parent[ru] = rv;
    }
    if (multi && cyclic)
        throw ContractError("graph is both a multigraph and cyclic");
    if (multi) return Topology::Multi;
    if (cyclic) return Topology::Cyclic;
    return Topology::SDAG;
}

namespace {

char kind_char(NodeKind k) {
    switch (k) {
        case NodeKind::Constant: return 'c';
        case NodeKind::Existential: return 'e';
        case NodeKind::Free: return 'f';
    }
    throw ContractError("invalid node kind value");
}

}  // namespace

std::string canonical_form(const AbstractQueryGraph& g) {
    int n = g.num_nodes();

    // Canonical node order groups kinds into blocks (constants, existentials,
    // frees); the bijection search permutes nodes within each block only.
    std::array<std::vector<int>, 3> blocks;
    for (int i = 0; i < n; ++i)
        blocks[static_cast<int>(g.kinds[i])].push_back(i);

    std::string prefix;
    for (const auto& block : blocks)
        for (int node : block) prefix += kind_char(g.kinds[node]);
    prefix += '|';

    std::vector<int> canonical_id(n);
    std::string best;

    auto score_current = [&]() {
        std::vector<std::array<int, 3>> relabeled;
        relabeled.reserve(g.edges.size());
        for (const AbstractEdge& e : g.edges) {
            auto [lo, hi] = std::minmax(canonical_id[e.u], canonical_id[e.v]);
            relabeled.push_back({lo, hi, e.neg ? 1 : 0});
        }
        std::sort(relabeled.begin(), relabeled.end());
        std::string s;
        s.reserve(relabeled.size() * 3);
        for (const auto& [lo, hi, neg] : relabeled) {
            s += static_cast<char>('0' + lo);
            s += static_cast<char>('0' + hi);
            s += neg ? '-' : '+';
        }
        if (best.empty() || s < best) best = s;
    };

    // Odometer over within-block permutations.
    std::array<std::vector<int>, 3> perms;
    for (int b = 0; b < 3; ++b) {
        perms[b].resize(blocks[b].size());
        std::iota(perms[b].begin(), perms[b].end(), 0);
    }
    int offsets[3] = {0, static_cast<int>(blocks[0].size()),
                      static_cast<int>(blocks[0].size() + blocks[1].size())};

    auto apply = [&]() {
        for (int b = 0; b < 3; ++b)
            for (std::size_t i = 0; i < blocks[b].size(); ++i)
                canonical_id[blocks[b][i]] = offsets[b] + perms[b][i];
    };

    std::function<void(int)> recurse = [&](int b) {
        if (b == 3) {
            apply();
            score_current();
            return;
        }
        std::sort(perms[b].begin(), perms[b].end());
        do {
            recurse(b + 1);
        } while (std::next_permutation(perms[b].begin(), perms[b].end()));
    };
    recurse(0);

    return prefix + best;
}

std::vector<int> GroundedQueryGraph::variable_ids() const {
    std::set<int> vars;
    for (const GroundedEdge& e : edges) {
        if (!e.h.is_const) vars.insert(static_cast<int>(e.h.id));
        if (!e.t.is_const) vars.insert(static_cast<int>(e.t.id));
    }
    return {vars.begin(), vars.end()};
}

AnswerSet union_answers(const std::vector<AnswerSet>& parts) {
    AnswerSet out;
    if (parts.empty()) return out;
    out.k = parts.front().k;
    for (const AnswerSet& part : parts) {
        if (part.k != out.k)
            throw ContractError("answer arity mismatch in union");
        out.tuples.insert(part.tuples.begin(), part.tuples.end());
    }
    return out;
}

std::set<EntityId> free_var_projection(const AnswerSet& a, std::size_t i) {
    if (i >= a.k) throw ContractError("projection index out of range");
    std::set<EntityId> out;
    for (const AnswerTuple& t : a.tuples) out.insert(t[i]);
    return out;
}

using nlohmann::json;

namespace {

json parse_line(const std::string& line) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw SchemaError("invalid JSON: " + line);
    return j;
}

// Strict field access: wrong or missing fields are schema errors, never
// silent defaults.
const json& need(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end())
        throw SchemaError(std::string("missing field \"") + key + "\"");
    return *it;
}

int need_int(const json& j, const char* key) {
    const json& v = need(j, key);
    if (!v.is_number_integer())
        throw SchemaError(std::string("field \"") + key + "\" must be an integer");
    return v.get<int>();
}

bool need_bool(const json& j, const char* key) {
    const json& v = need(j, key);
    if (!v.is_boolean())
        throw SchemaError(std::string("field \"") + key + "\" must be a boolean");
    return v.get<bool>();
}

json term_to_json(const Term& t) {
    if (t.is_const) return json{{"const", t.id}};
    return json{{"var", t.id}};
}

Term term_from_json(const json& j) {
    if (!j.is_object() || j.size() != 1)
        throw SchemaError("term must be {\"const\":id} or {\"var\":id}");
    if (j.contains("const")) return Term::constant(j["const"].get<EntityId>());
    if (j.contains("var")) return Term::var(j["var"].get<int>());
    throw SchemaError("term must be {\"const\":id} or {\"var\":id}");
}

}  // namespace

std::string abstract_to_json(const AbstractQueryGraph& g) {
    json nodes = json::array();
    for (int i = 0; i < g.num_nodes(); ++i)
        nodes.push_back({{"id", i}, {"kind", node_kind_name(g.kinds[i])}});
    json edges = json::array();
    for (const AbstractEdge& e : g.edges)
        edges.push_back({{"u", e.u}, {"v", e.v}, {"neg", e.neg}});
    return json{{"nodes", nodes}, {"edges", edges}}.dump();
}

AbstractQueryGraph abstract_from_json(const std::string& line) {
    json j = parse_line(line);
    const json& nodes = need(j, "nodes");
    const json& edges = need(j, "edges");
    if (!nodes.is_array() || !edges.is_array())
        throw SchemaError("nodes and edges must be arrays");

    AbstractQueryGraph g;
    g.kinds.assign(nodes.size(), NodeKind::Constant);
    std::vector<bool> seen(nodes.size(), false);
    for (const json& node : nodes) {
        int id = need_int(node, "id");
        if (id < 0 || id >= static_cast<int>(nodes.size()) || seen[id])
            throw SchemaError("node ids must be dense and unique");
        seen[id] = true;
        const json& kind = need(node, "kind");
        if (!kind.is_string()) throw SchemaError("node kind must be a string");
        g.kinds[id] = node_kind_from_name(kind.get<std::string>());
    }
    for (const json& edge : edges)
        g.edges.push_back(
            {need_int(edge, "u"), need_int(edge, "v"), need_bool(edge, "neg")});
    g.validate();
    return g;
}

std::string grounded_to_json(const GroundedQueryGraph& g) {
    json edges = json::array();
    for (const GroundedEdge& e : g.edges)
        edges.push_back({{"h", term_to_json(e.h)},
                         {"r", e.r},
                         {"t", term_to_json(e.t)},
                         {"neg", e.neg}});
    return json{{"edges", edges}, {"free_vars", g.free_vars}}.dump();
}

GroundedQueryGraph grounded_from_json(const std::string& line) {
    json j = parse_line(line);
    const json& edges = need(j, "edges");
    const json& frees = need(j, "free_vars");
    if (!edges.is_array() || !frees.is_array())
        throw SchemaError("edges and free_vars must be arrays");

    GroundedQueryGraph g;
    for (const json& edge : edges) {
        GroundedEdge e;
        e.h = term_from_json(need(edge, "h"));
        const json& r = need(edge, "r");
        if (!r.is_number_integer() || r.get<std::int64_t>() < 0)
            throw SchemaError("relation id must be a non-negative integer");
        e.r = r.get<RelationId>();
        e.t = term_from_json(need(edge, "t"));
        e.neg = need_bool(edge, "neg");
        g.edges.push_back(e);
    }
    for (const json& f : frees) {
        if (!f.is_number_integer())
            throw SchemaError("free_vars entries must be integers");
        g.free_vars.push_back(f.get<int>());
    }
    if (!std::is_sorted(g.free_vars.begin(), g.free_vars.end()))
        throw SchemaError("free_vars must be ascending");
    return g;
}

}  // namespace efoq
