#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "efoq/kg.hpp"
#include "efoq/query.hpp"

namespace efoq {

// Binary constraint network over the variables of a grounded query graph.
// Constants are not materialized as variables; they stay inline in the edges
// as fixed terms, which is the singleton-domain view. Variable domains are
// finite entity lists, already narrowed by every constant-adjacent edge.
struct ConstraintNetwork {
    std::map<int, std::vector<EntityId>> domains;  // node id -> sorted values
    std::vector<GroundedEdge> edges;
    std::vector<int> free_vars;
    const KnowledgeGraph* kg = nullptr;  // graph the network was built against
    bool wiped = false;  // some domain emptied; no solutions exist

    std::uint32_t num_entities = 0;
    std::uint32_t num_relations = 0;
};

struct SolveStats {
    long propagation_revisions = 0;
    long backtrack_nodes = 0;
    double wall_seconds = 0.0;
};

ConstraintNetwork build_network(const GroundedQueryGraph& q,
                                const KnowledgeGraph& kg);

// Arc-consistent fixpoint over positive constraints. Negative constraints do
// not propagate; the constant-adjacent ones were folded into the initial
// domains and the rest are enforced during search.
void propagate(ConstraintNetwork& net, SolveStats* stats = nullptr);

// Exact free-variable answers: tuples for which some witness assignment of
// the existential variables satisfies every edge.
AnswerSet solve_efo(const GroundedQueryGraph& q, const KnowledgeGraph& kg,
                    SolveStats* stats = nullptr);

// Every satisfying assignment over all variables, free and existential.
struct CspSolutions {
    std::vector<int> var_ids;  // ascending node ids; row entries align
    std::set<std::vector<EntityId>> rows;
};

// Materializes the full assignment set; refuses (resource error) when the
// post-propagation domain-size product exceeds the cap.
CspSolutions solve_csp(const GroundedQueryGraph& q, const KnowledgeGraph& kg,
                       std::uint64_t cap = 10'000'000);

// Test oracle sharing solve_efo's contract, implemented as exhaustive
// enumeration of all entity assignments with no pruning. The cap bounds the
// assignment count.
AnswerSet brute_force_oracle(const GroundedQueryGraph& q,
                             const KnowledgeGraph& kg,
                             std::uint64_t cap = 50'000'000);

}  // namespace efoq
