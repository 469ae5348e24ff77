#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "efoq/enumerate.hpp"
#include "efoq/ground.hpp"
#include "efoq/kg.hpp"
#include "efoq/reason.hpp"

namespace efoq {

// Whole-entity-set rank plus the score-comparison counts for one recorded
// answer entity. rank breaks ties by ascending id; better and tied count
// against all entities, so filtering can subtract answers later.
struct RankEntry {
    EntityId entity = 0;
    std::int64_t rank = 0;
    std::int64_t better = 0;
    std::int64_t tied = 0;

    friend bool operator==(const RankEntry&, const RankEntry&) = default;
};

struct VarRanking {
    int var = 0;
    std::vector<RankEntry> entries;  // ascending entity id

    friend bool operator==(const VarRanking&, const VarRanking&) = default;
};

struct SampleRanking {
    std::string formula_id;
    int sample_index = 0;
    std::uint32_t num_entities = 0;
    std::vector<VarRanking> vars;  // aligned with the sample's free_vars

    friend bool operator==(const SampleRanking&, const SampleRanking&) = default;
};

// Records, per free variable, every entity appearing in an easy or hard
// answer tuple (the entities the evaluator must never count as non-answers).
SampleRanking rank_sample(const GroundedSample& s, const RankingTable& table);

std::string ranking_to_json(const SampleRanking& r);
SampleRanking ranking_from_json(const std::string& line);

// Rank of the entity among itself and the non-answers, with ties counted
// against it. The entity must be one of the recorded answers.
std::int64_t filtered_rank(const VarRanking& vr, EntityId entity);

// Position of (r1, r2) when pairs are sorted by rank sum, then
// lexicographically: C(r1+r2-1, 2) + r1.
std::int64_t joint_rank_k2(std::int64_t r1, std::int64_t r2);

struct MetricVector {
    double mrr = 0.0;
    std::map<int, double> hit;  // threshold -> score

    friend bool operator==(const MetricVector&, const MetricVector&) = default;
};

// Mean over each variable's marginal hard answers, averaged across the
// variables that have any; nullopt when no variable does (query skipped).
std::optional<MetricVector> marginal_metrics(const GroundedSample& s,
                                             const SampleRanking& r,
                                             const std::vector<int>& ks);

// HIT@n^k per hard tuple: 1 when every component's filtered rank is within n.
// The mrr field stays 0; the metric is defined for hits only.
MetricVector multiply_metrics(const GroundedSample& s, const SampleRanking& r,
                              const std::vector<int>& ks);

// Closed-form joint rank of each hard tuple from whole-set component ranks,
// filtered by subtracting other answer tuples ranked ahead. Two free
// variables only.
MetricVector joint_metrics(const GroundedSample& s, const SampleRanking& r,
                           const std::vector<int>& ks);

struct QueryMetrics {
    std::string formula_id;
    int sample_index = 0;
    std::optional<MetricVector> marginal;  // absent: skipped or not requested
    std::optional<MetricVector> multiply;  // absent: not requested
    std::optional<MetricVector> joint;     // absent: not requested or k != 2
};

QueryMetrics evaluate_query(const GroundedSample& s, const SampleRanking& r,
                            const std::vector<int>& ks, bool with_joint);

struct CellReport {
    TypeCell cell;
    int type_count = 0;
    int query_count = 0;
    int marginal_skipped = 0;
    std::optional<MetricVector> marginal;
    std::optional<MetricVector> multiply;
    std::optional<MetricVector> joint;
};

struct EvalReport {
    std::vector<int> ks;
    std::vector<CellReport> cells;  // sorted by (k, c, e, topology)
};

// Macro averages: queries to their type, types to their cell. A type with
// every query skipped contributes nothing to the cell's marginal mean but
// stays in the skip count.
EvalReport aggregate(const std::vector<QueryMetrics>& queries,
                     const std::map<std::string, TypeCell>& cells_by_type,
                     const std::vector<int>& ks);

// Cells plus per-c and per-e averages, mirroring the count-matrix layout.
std::string report_to_json(const EvalReport& rep);

// Operator-tree shapes: one free variable, all edges positive, SDAG, and no
// existential leaf. The single forward pass is exact on these.
bool is_tree_form(const AbstractQueryGraph& g);

struct SanityReport {
    int checked = 0;
    int passed = 0;
};

// Crisp reasoner over the observed graph: every easy answer of a tree-form
// sample must score 1 at its variable.
SanityReport crisp_sanity_eval(const std::vector<GroundedSample>& samples,
                               const KnowledgeGraph& observed);

}  // namespace efoq
