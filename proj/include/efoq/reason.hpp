#pragma once

#include <map>
#include <memory>
#include <vector>

#include "efoq/kg.hpp"
#include "efoq/query.hpp"

namespace efoq {

struct ReasonerState {
    virtual ~ReasonerState() = default;
};
using StatePtr = std::shared_ptr<const ReasonerState>;

// Pluggable operator backend. States are opaque; implementations must be safe
// for concurrent read-only use.
class OperatorInterface {
  public:
    virtual ~OperatorInterface() = default;
    virtual StatePtr entity_encode(EntityId e) const = 0;
    virtual StatePtr projection(const StatePtr& s, RelationId r) const = 0;
    virtual StatePtr negated_projection(const StatePtr& s,
                                        RelationId r) const = 0;
    virtual StatePtr intersection(const std::vector<StatePtr>& parts) const = 0;
    virtual double score(const StatePtr& s, EntityId e) const = 0;
    virtual std::size_t num_entities() const = 0;
};

// Constants first in id order, then variables: existential frontier members
// leave by descending total distance to the free variables, free frontier
// members only when no existential is waiting. Ties break on the lowest node
// id. A graph without constants (or a disconnected one) cannot be ordered.
using NodeOrdering = std::vector<int>;
NodeOrdering order_nodes(const AbstractQueryGraph& g);

// Abstract view recovered from a grounded graph: variables keep their node
// ids and every constant occurrence anchors a node of its own (gap-filled
// into the id range), matching the single-edge constants the enumerator
// emits. Edge i mirrors q.edges[i] with h on the u side.
struct QueryShape {
    AbstractQueryGraph graph;
    std::map<int, EntityId> const_entities;
};
QueryShape shape_of(const GroundedQueryGraph& q);

// Single forward pass over the ordering: constants are encoded, variables
// fold the projections arriving from already-ordered neighbors (negated for
// negative edges), absent inputs are skipped. A free variable left without a
// state cannot be ranked and raises ExecutionError.
std::map<int, StatePtr> execute(const GroundedQueryGraph& q,
                                const NodeOrdering& ordering,
                                const OperatorInterface& ops);

// Reference backend over entity sets: projection is the union of tails,
// negated projection its complement, score is membership. The graph must
// outlive the returned interface.
std::unique_ptr<OperatorInterface> crisp_ops(const KnowledgeGraph& kg);

struct RankingTable {
    std::vector<int> free_vars;
    std::vector<std::vector<EntityId>> order;  // per variable, best first
    std::vector<std::vector<double>> scores;   // per variable, by entity id
};

// Entities sorted by descending score, ties by ascending id.
RankingTable rank(const std::map<int, StatePtr>& states,
                  const OperatorInterface& ops,
                  const std::vector<int>& free_vars);

}  // namespace efoq
