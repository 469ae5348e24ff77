#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "efoq/kg.hpp"
#include "efoq/query.hpp"
#include "efoq/rng.hpp"

namespace efoq {

// Indexes into an abstract graph, separating the positive part from the
// negative edges. Node ids are preserved.
struct PositiveSplit {
    std::vector<int> nodes;                  // V' ascending
    std::vector<std::size_t> positive_edges;  // indexes into g.edges
    std::vector<std::size_t> negative_edges;
};

PositiveSplit split_positive_subgraph(const AbstractQueryGraph& g);

// Assignment of entities to constant nodes and of a directed relation to
// each edge. swapped flips the abstract (u,v) orientation.
struct Grounding {
    std::map<int, EntityId> constants;
    std::map<std::size_t, RelationId> relations;
    std::map<std::size_t, bool> swapped;
};

struct PositiveGrounding {
    Grounding grounding;
    std::map<int, EntityId> witnesses;  // per-variable satisfying assignment
    std::map<int, std::vector<EntityId>> candidates;  // arc-consistent sets
};

// Samples constants and relations for the positive subgraph by walking
// outward from a random witness, so the result is satisfiable by
// construction. Throws ResourceError when the graph cannot be grounded on
// this KG within the retry budget.
PositiveGrounding ground_positive(const AbstractQueryGraph& g,
                                  const PositiveSplit& split,
                                  const KnowledgeGraph& kg, Rng& rng,
                                  int max_retries = 128);

// Grounds the negative edges so each one forbids at least one combination of
// arc-consistent candidates (the meaningful-negation requirement, enforced
// with local candidate information only). Extends pg.grounding in place.
void ground_negative(const AbstractQueryGraph& g, const PositiveSplit& split,
                     PositiveGrounding& pg, const KnowledgeGraph& kg, Rng& rng,
                     int max_retries = 128);

// Assembles the grounded graph; every edge must be grounded.
GroundedQueryGraph to_grounded(const AbstractQueryGraph& g,
                               const Grounding& grounding);

struct GroundedSample {
    std::string formula_id;
    int sample_index = 0;
    GroundedQueryGraph query;
    AnswerSet easy_answers;  // observed-graph answers
    AnswerSet hard_answers;  // full-graph answers minus easy
    std::vector<std::set<EntityId>> marginal_hard;  // per free variable
};

struct SampleConfig {
    int num_positive_type = 1000;  // samples per all-positive type
    int num_negative_type = 500;   // samples per type with a negative edge
    int answer_bound_per_free = 100;
    std::uint64_t seed = 0;
    int max_retries = 128;
    int workers = 1;
};

struct SampleRun {
    std::vector<GroundedSample> samples;  // ordered by (formula_id, index)
    std::map<std::string, int> shortfall;  // formula_id -> samples not filled
};

// Samples, solves, and filters the dataset for every type. Deterministic for
// a fixed config: each (type, index) task draws from its own derived stream,
// so the worker count never changes the output.
SampleRun sample_dataset(const std::vector<AbstractQueryGraph>& types,
                         const KgPair& kgs, const SampleConfig& cfg);

std::string sample_to_json(const GroundedSample& s);
GroundedSample sample_from_json(const std::string& line);

}  // namespace efoq
