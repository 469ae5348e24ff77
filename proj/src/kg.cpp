#include "efoq/kg.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <unordered_set>

#include "efoq/error.hpp"

namespace efoq {

namespace {

std::uint64_t fkey(EntityId h, RelationId r) {
    return (static_cast<std::uint64_t>(h) << 32) | r;
}

const std::vector<EntityId> kNoTails;

}  // namespace

KnowledgeGraph::KnowledgeGraph(std::uint32_t num_entities,
                               std::uint32_t num_relations,
                               const std::vector<Triple>& base_triples)
    : num_entities_(num_entities), num_relations_(num_relations) {
    if (num_relations_ % 2 != 0)
        throw ContractError("relation count must include inverses (even)");

    std::vector<Triple> base = base_triples;
    std::sort(base.begin(), base.end());
    base.erase(std::unique(base.begin(), base.end()), base.end());
    num_base_triples_ = base.size();

    endpoints_.resize(num_relations_);
    pairs_.resize(num_relations_);
    for (const Triple& tr : base) {
        check_entity(tr.h);
        check_entity(tr.t);
        check_relation(tr.r);
        if (tr.r % 2 != 0)
            throw ContractError("input triples must use base relation ids");
        forward_[fkey(tr.h, tr.r)].push_back(tr.t);
        forward_[fkey(tr.t, inverse(tr.r))].push_back(tr.h);
        pairs_[tr.r].emplace_back(tr.h, tr.t);
        pairs_[inverse(tr.r)].emplace_back(tr.t, tr.h);
        endpoints_[tr.r].push_back(tr.h);
        endpoints_[tr.r].push_back(tr.t);
        endpoints_[inverse(tr.r)].push_back(tr.h);
        endpoints_[inverse(tr.r)].push_back(tr.t);
    }
    for (auto& [key, tails] : forward_) {
        (void)key;
        std::sort(tails.begin(), tails.end());
        tails.erase(std::unique(tails.begin(), tails.end()), tails.end());
    }
    for (auto& eps : endpoints_) {
        std::sort(eps.begin(), eps.end());
        eps.erase(std::unique(eps.begin(), eps.end()), eps.end());
    }
    for (auto& ps : pairs_) std::sort(ps.begin(), ps.end());
}

void KnowledgeGraph::check_entity(EntityId e) const {
    if (e >= num_entities_)
        throw ContractError("entity id " + std::to_string(e) + " out of range");
}

void KnowledgeGraph::check_relation(RelationId r) const {
    if (r >= num_relations_)
        throw ContractError("relation id " + std::to_string(r) + " out of range");
}

const std::vector<EntityId>& KnowledgeGraph::tails(EntityId h,
                                                   RelationId r) const {
    check_entity(h);
    check_relation(r);
    auto it = forward_.find(fkey(h, r));
    return it == forward_.end() ? kNoTails : it->second;
}

bool KnowledgeGraph::has(EntityId h, RelationId r, EntityId t) const {
    const std::vector<EntityId>& ts = tails(h, r);
    return std::binary_search(ts.begin(), ts.end(), t);
}

const std::vector<EntityId>& KnowledgeGraph::endpoints(RelationId r) const {
    check_relation(r);
    return endpoints_[r];
}

const std::vector<std::pair<EntityId, EntityId>>& KnowledgeGraph::pairs(
    RelationId r) const {
    check_relation(r);
    return pairs_[r];
}

std::vector<RelationId> KnowledgeGraph::relations_between(EntityId a,
                                                          EntityId b) const {
    check_entity(a);
    check_entity(b);
    std::vector<RelationId> out;
    for (RelationId r = 0; r < num_relations_; ++r) {
        auto it = forward_.find(fkey(a, r));
        if (it != forward_.end() &&
            std::binary_search(it->second.begin(), it->second.end(), b))
            out.push_back(r);
    }
    return out;
}

namespace {

struct RawTriple {
    std::uint32_t h, r, t;
};

// Reads one split file, interning labels in first-seen order.
void read_split(const std::string& path,
                std::unordered_map<std::string, std::uint32_t>& entity_ids,
                std::vector<std::string>& entity_labels,
                std::unordered_map<std::string, std::uint32_t>& relation_ids,
                std::vector<std::string>& relation_labels,
                std::vector<RawTriple>& out) {
    if (!std::filesystem::is_regular_file(path))
        throw SchemaError("not a readable triple file: " + path);
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open triple file: " + path);

    auto intern = [](const std::string& label,
                     std::unordered_map<std::string, std::uint32_t>& ids,
                     std::vector<std::string>& labels) {
        auto [it, inserted] =
            ids.emplace(label, static_cast<std::uint32_t>(labels.size()));
        if (inserted) labels.push_back(label);
        return it->second;
    };

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::size_t tab1 = line.find('\t');
        std::size_t tab2 =
            tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
        if (tab2 == std::string::npos || line.find('\t', tab2 + 1) != std::string::npos)
            throw SchemaError(path + ":" + std::to_string(lineno) +
                              ": expected exactly three tab-separated tokens");
        std::string hs = line.substr(0, tab1);
        std::string rs = line.substr(tab1 + 1, tab2 - tab1 - 1);
        std::string ts = line.substr(tab2 + 1);
        if (hs.empty() || rs.empty() || ts.empty())
            throw SchemaError(path + ":" + std::to_string(lineno) +
                              ": empty token");
        out.push_back({intern(hs, entity_ids, entity_labels),
                       intern(rs, relation_ids, relation_labels),
                       intern(ts, entity_ids, entity_labels)});
    }
}

}  // namespace

KgPair load_kg(const std::vector<std::string>& triple_file_paths) {
    std::unordered_map<std::string, std::uint32_t> entity_ids;
    std::unordered_map<std::string, std::uint32_t> relation_ids;
    KgPair kg;

    std::vector<RawTriple> raw;
    std::size_t observed_end = 0;
    for (std::size_t i = 0; i < triple_file_paths.size(); ++i) {
        read_split(triple_file_paths[i], entity_ids, kg.entity_labels,
                   relation_ids, kg.relation_labels, raw);
        if (i == 0) observed_end = raw.size();
    }

    std::uint32_t ne = static_cast<std::uint32_t>(kg.entity_labels.size());
    std::uint32_t nr = 2 * static_cast<std::uint32_t>(kg.relation_labels.size());

    std::vector<Triple> triples;
    triples.reserve(raw.size());
    for (const RawTriple& rt : raw) triples.push_back({rt.h, 2 * rt.r, rt.t});

    std::vector<Triple> observed(triples.begin(),
                                 triples.begin() + static_cast<std::ptrdiff_t>(observed_end));
    kg.observed = KnowledgeGraph(ne, nr, observed);
    kg.full = KnowledgeGraph(ne, nr, triples);
    return kg;
}

void write_id_maps(const KgPair& kg, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    {
        std::ofstream out(out_dir + "/entity_id.tsv");
        for (std::size_t i = 0; i < kg.entity_labels.size(); ++i)
            out << kg.entity_labels[i] << '\t' << i << '\n';
    }
    {
        // Base labels only; relation 2i+1 is the unnamed inverse of 2i.
        std::ofstream out(out_dir + "/relation_id.tsv");
        for (std::size_t i = 0; i < kg.relation_labels.size(); ++i)
            out << kg.relation_labels[i] << '\t' << 2 * i << '\n';
    }
}

}  // namespace efoq
