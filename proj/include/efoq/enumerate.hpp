#pragma once

#include <string>
#include <vector>

#include "efoq/query.hpp"

namespace efoq {

struct EnumBudget {
    int max_free = 2;
    int max_exist = 2;
    int max_const = 3;
    int max_nodes = 6;
    int max_edges = 6;
    int max_extra_edges = 0;  // edges allowed beyond node count
    int max_neg_edges = 1;
    int max_dist_to_free = 3;
};

// How the negation step resolves the underdetermined parts of the generation
// procedure (see the README's open questions).
//   Reference:  leaf-pruned skeletons; each skeleton additionally yields one
//               negated variant when any placement is legal.
//   Exhaustive: leaf-pruned skeletons; every legal placement is its own type.
//   Unfiltered: no leaf pruning; every placement keeping all variables
//               positively attached is its own type.
enum class NegationProfile { Reference, Exhaustive, Unfiltered };

NegationProfile profile_from_name(const std::string& name);
const char* profile_name(NegationProfile p);

// All abstract query graphs within the budget, isomorphism-deduplicated and
// sorted by (node count, edge count, canonical form) so that positions are
// stable type ids.
std::vector<AbstractQueryGraph> enumerate_abstract(
    const EnumBudget& budget,
    NegationProfile profile = NegationProfile::Reference);

// Structural stand-ins for the non-redundancy assumption: no edge between two
// constants, and no all-quantified component once constants are removed.
bool check_no_redundancy(const AbstractQueryGraph& g);

// Removing every constant node leaves exactly one variable component.
bool check_no_decomposition(const AbstractQueryGraph& g);

// Every variable node keeps at least one positive incident edge.
bool check_negation_placement(const AbstractQueryGraph& g);

// Grouping key for count matrices.
struct TypeCell {
    int k;  // free variables
    int c;  // constants
    int e;  // existentials
    Topology topo;

    friend bool operator==(const TypeCell&, const TypeCell&) = default;
    friend auto operator<=>(const TypeCell&, const TypeCell&) = default;
};

TypeCell cell_of(const AbstractQueryGraph& g);

}  // namespace efoq
