#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "efoq/kg.hpp"

namespace efoq {

enum class NodeKind : std::uint8_t { Constant, Existential, Free };

NodeKind node_kind_from_name(const std::string& name);
const char* node_kind_name(NodeKind kind);

struct AbstractEdge {
    int u;
    int v;
    bool neg;

    friend bool operator==(const AbstractEdge&, const AbstractEdge&) = default;
};

// Node ids are indexes into kinds. Edges are undirected; direction appears
// only at grounding time, when a relation or its inverse is chosen.
struct AbstractQueryGraph {
    std::vector<NodeKind> kinds;
    std::vector<AbstractEdge> edges;

    int num_nodes() const { return static_cast<int>(kinds.size()); }
    int count_kind(NodeKind k) const;

    // Throws ContractError unless the graph is connected, self-loop free,
    // constant-constant free, has a free node, and every variable has a
    // positive incident edge.
    void validate() const;

    friend bool operator==(const AbstractQueryGraph&,
                           const AbstractQueryGraph&) = default;
};

enum class Topology : std::uint8_t { SDAG, Multi, Cyclic };

const char* topology_name(Topology t);

// Multi when some node pair carries parallel edges, Cyclic when the simple
// graph has a cycle; both at once is outside the supported budget and throws.
Topology classify_topology(const AbstractQueryGraph& g);

// Equal strings exactly for graphs isomorphic under a node bijection that
// preserves kinds and a multiset bijection of edges that preserves polarity.
std::string canonical_form(const AbstractQueryGraph& g);

struct Term {
    bool is_const;
    std::uint32_t id;  // entity id for constants, node id for variables

    static Term constant(EntityId e) { return {true, e}; }
    static Term var(int node) { return {false, static_cast<std::uint32_t>(node)}; }

    friend bool operator==(const Term&, const Term&) = default;
};

struct GroundedEdge {
    Term h;
    RelationId r;
    Term t;
    bool neg;

    friend bool operator==(const GroundedEdge&, const GroundedEdge&) = default;
};

struct GroundedQueryGraph {
    std::vector<GroundedEdge> edges;
    std::vector<int> free_vars;  // ascending node ids; fixes answer-tuple order

    // Node ids of all variables, free and existential, ascending.
    std::vector<int> variable_ids() const;

    friend bool operator==(const GroundedQueryGraph&,
                           const GroundedQueryGraph&) = default;
};

using AnswerTuple = std::vector<EntityId>;

struct AnswerSet {
    std::size_t k = 0;
    std::set<AnswerTuple> tuples;

    friend bool operator==(const AnswerSet&, const AnswerSet&) = default;
};

// Set union over DNF disjunct answers; arity mismatch is a contract breach.
AnswerSet union_answers(const std::vector<AnswerSet>& parts);

// i-th components of all tuples (the CSP solution projection).
std::set<EntityId> free_var_projection(const AnswerSet& a, std::size_t i);

// JSONL forms. Abstract graphs serialize as
//   {"nodes":[{"id":0,"kind":"constant"}],"edges":[{"u":0,"v":1,"neg":false}]}
// and grounded graphs embed terms as {"const":123} or {"var":2}.
std::string abstract_to_json(const AbstractQueryGraph& g);
AbstractQueryGraph abstract_from_json(const std::string& line);
std::string grounded_to_json(const GroundedQueryGraph& g);
GroundedQueryGraph grounded_from_json(const std::string& line);

}  // namespace efoq
