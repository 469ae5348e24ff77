#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace efoq {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;

// Relations come in pairs: the base direction gets an even id, its inverse
// the following odd id, so inversion is a single bit flip.
constexpr RelationId inverse(RelationId r) { return r ^ 1u; }

struct Triple {
    EntityId h;
    RelationId r;
    EntityId t;

    friend bool operator==(const Triple&, const Triple&) = default;
    friend auto operator<=>(const Triple&, const Triple&) = default;
};

// Immutable indexed triple store. Construction takes triples in their base
// direction and materializes the inverse of each, so tails() answers both
// directions uniformly and heads() is just tails() under the inverse id.
class KnowledgeGraph {
public:
    KnowledgeGraph() = default;
    KnowledgeGraph(std::uint32_t num_entities, std::uint32_t num_relations,
                   const std::vector<Triple>& base_triples);

    std::uint32_t num_entities() const { return num_entities_; }
    // Counts both directions; always even.
    std::uint32_t num_relations() const { return num_relations_; }
    // Base-direction triples only, after deduplication.
    std::size_t num_triples() const { return num_base_triples_; }

    // Sorted unique tails {t : (h,r,t)}; both arguments range checked.
    const std::vector<EntityId>& tails(EntityId h, RelationId r) const;
    const std::vector<EntityId>& heads(RelationId r, EntityId t) const {
        return tails(t, inverse(r));
    }
    bool has(EntityId h, RelationId r, EntityId t) const;

    // Sorted unique entities occurring as head or tail of relation r.
    const std::vector<EntityId>& endpoints(RelationId r) const;

    // Sorted unique (h,t) pairs of relation r.
    const std::vector<std::pair<EntityId, EntityId>>& pairs(RelationId r) const;

    // Sorted relation ids r with (a,r,b) present; covers both directions
    // because inverse triples are materialized.
    std::vector<RelationId> relations_between(EntityId a, EntityId b) const;

private:
    void check_entity(EntityId e) const;
    void check_relation(RelationId r) const;

    std::uint32_t num_entities_ = 0;
    std::uint32_t num_relations_ = 0;
    std::size_t num_base_triples_ = 0;
    std::unordered_map<std::uint64_t, std::vector<EntityId>> forward_;
    std::vector<std::vector<EntityId>> endpoints_;
    std::vector<std::vector<std::pair<EntityId, EntityId>>> pairs_;
};

// Train-only and train+valid+test views over one id space.
struct KgPair {
    KnowledgeGraph observed;
    KnowledgeGraph full;
    std::vector<std::string> entity_labels;
    // Labels of base relations; relation 2i has label relation_labels[i].
    std::vector<std::string> relation_labels;
};

// Loads tab-separated head/relation/tail files. The first path is the train
// split and defines the observed graph; all paths together define the full
// graph. Ids are dense and assigned in first-seen order, train file first.
KgPair load_kg(const std::vector<std::string>& triple_file_paths);

// Writes "label<TAB>id" maps next to the generated artifacts.
void write_id_maps(const KgPair& kg, const std::string& out_dir);

}  // namespace efoq
