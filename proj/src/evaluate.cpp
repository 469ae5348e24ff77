#include "efoq/evaluate.hpp"

#include <algorithm>
#include <utility>

#include <nlohmann/json.hpp>

#include "efoq/error.hpp"

namespace efoq {

using nlohmann::json;

namespace {

// Entities appearing in some recorded answer tuple, per free-variable column.
std::vector<std::set<EntityId>> answer_columns(const GroundedSample& s) {
    std::size_t k = s.query.free_vars.size();
    std::vector<std::set<EntityId>> cols(k);
    for (const AnswerSet* as : {&s.easy_answers, &s.hard_answers})
        for (const auto& t : as->tuples)
            for (std::size_t i = 0; i < k; ++i) cols[i].insert(t[i]);
    return cols;
}

const RankEntry& find_entry(const VarRanking& vr, EntityId entity) {
    auto it = std::lower_bound(
        vr.entries.begin(), vr.entries.end(), entity,
        [](const RankEntry& a, EntityId e) { return a.entity < e; });
    if (it == vr.entries.end() || it->entity != entity)
        throw ContractError("entity is not a recorded answer for variable " +
                            std::to_string(vr.var));
    return *it;
}

void check_pair(const GroundedSample& s, const SampleRanking& r) {
    if (r.formula_id != s.formula_id || r.sample_index != s.sample_index)
        throw SchemaError("ranking record does not match the sample");
    if (r.vars.size() != s.query.free_vars.size())
        throw SchemaError("ranking record lists the wrong variable count");
    for (std::size_t i = 0; i < r.vars.size(); ++i)
        if (r.vars[i].var != s.query.free_vars[i])
            throw SchemaError("ranking record lists the wrong variable ids");
}

MetricVector zeroed(const std::vector<int>& ks) {
    MetricVector m;
    for (int k : ks) m.hit[k] = 0.0;
    return m;
}

}  // namespace

SampleRanking rank_sample(const GroundedSample& s, const RankingTable& table) {
    if (table.free_vars != s.query.free_vars)
        throw ContractError("ranking table covers different free variables");
    SampleRanking out;
    out.formula_id = s.formula_id;
    out.sample_index = s.sample_index;
    auto cols = answer_columns(s);
    out.vars.resize(cols.size());
    for (std::size_t i = 0; i < cols.size(); ++i) {
        const auto& scores = table.scores[i];
        out.num_entities = static_cast<std::uint32_t>(scores.size());
        std::vector<std::int64_t> pos(scores.size(), 0);
        for (std::size_t p = 0; p < table.order[i].size(); ++p)
            pos[table.order[i][p]] = static_cast<std::int64_t>(p) + 1;
        std::vector<double> asc(scores);
        std::sort(asc.begin(), asc.end());
        auto& vr = out.vars[i];
        vr.var = s.query.free_vars[i];
        for (EntityId e : cols[i]) {
            if (e >= scores.size())
                throw ContractError("answer entity outside the scored range");
            auto lo = std::lower_bound(asc.begin(), asc.end(), scores[e]);
            auto hi = std::upper_bound(asc.begin(), asc.end(), scores[e]);
            RankEntry entry;
            entry.entity = e;
            entry.rank = pos[e];
            entry.better = asc.end() - hi;
            entry.tied = (hi - lo) - 1;
            vr.entries.push_back(entry);
        }
    }
    return out;
}

std::string ranking_to_json(const SampleRanking& r) {
    json vars = json::array();
    for (const auto& vr : r.vars) {
        json entries = json::array();
        for (const auto& e : vr.entries)
            entries.push_back(json{{"better", e.better},
                                   {"entity", e.entity},
                                   {"rank", e.rank},
                                   {"tied", e.tied}});
        vars.push_back(json{{"entries", std::move(entries)}, {"var", vr.var}});
    }
    json j{{"formula_id", r.formula_id},
           {"num_entities", r.num_entities},
           {"sample_index", r.sample_index},
           {"vars", std::move(vars)}};
    return j.dump();
}

SampleRanking ranking_from_json(const std::string& line) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw SchemaError("ranking line is not a JSON object");
    for (const char* key : {"formula_id", "num_entities", "sample_index", "vars"})
        if (!j.contains(key))
            throw SchemaError(std::string("ranking line lacks ") + key);
    SampleRanking r;
    if (!j["formula_id"].is_string())
        throw SchemaError("formula_id must be a string");
    r.formula_id = j["formula_id"].get<std::string>();
    if (!j["sample_index"].is_number_integer() ||
        j["sample_index"].get<std::int64_t>() < 0)
        throw SchemaError("sample_index must be a non-negative integer");
    r.sample_index = j["sample_index"].get<int>();
    if (!j["num_entities"].is_number_integer() ||
        j["num_entities"].get<std::int64_t>() < 1 ||
        j["num_entities"].get<std::int64_t>() > 0xffffffffLL)
        throw SchemaError("num_entities must be a positive integer");
    r.num_entities = j["num_entities"].get<std::uint32_t>();
    if (!j["vars"].is_array() || j["vars"].empty())
        throw SchemaError("vars must be a non-empty array");
    auto n = static_cast<std::int64_t>(r.num_entities);
    for (const auto& vj : j["vars"]) {
        if (!vj.is_object() || !vj.contains("var") || !vj.contains("entries"))
            throw SchemaError("each ranking variable needs var and entries");
        if (!vj["var"].is_number_integer() || vj["var"].get<std::int64_t>() < 0)
            throw SchemaError("var must be a non-negative integer");
        VarRanking vr;
        vr.var = vj["var"].get<int>();
        if (!vj["entries"].is_array() || vj["entries"].empty())
            throw SchemaError("entries must be a non-empty array");
        for (const auto& ej : vj["entries"]) {
            if (!ej.is_object())
                throw SchemaError("each ranking entry must be an object");
            for (const char* key : {"better", "entity", "rank", "tied"})
                if (!ej.contains(key) || !ej[key].is_number_integer())
                    throw SchemaError(std::string("ranking entry needs integer ") +
                                      key);
            RankEntry e;
            e.rank = ej["rank"].get<std::int64_t>();
            e.better = ej["better"].get<std::int64_t>();
            e.tied = ej["tied"].get<std::int64_t>();
            auto id = ej["entity"].get<std::int64_t>();
            if (id < 0 || id >= n)
                throw SchemaError("entry entity outside the entity range");
            e.entity = static_cast<EntityId>(id);
            if (e.rank < 1 || e.rank > n || e.better < 0 || e.tied < 0)
                throw SchemaError("entry counts outside the entity range");
            if (e.rank < e.better + 1 || e.rank > e.better + e.tied + 1)
                throw SchemaError("entry rank conflicts with its counts");
            if (!vr.entries.empty() && vr.entries.back().entity >= e.entity)
                throw SchemaError("entries must ascend by entity id");
            vr.entries.push_back(e);
        }
        r.vars.push_back(std::move(vr));
    }
    return r;
}

std::int64_t filtered_rank(const VarRanking& vr, EntityId entity) {
    const RankEntry& e = find_entry(vr, entity);
    std::int64_t better_answers = 0;
    std::int64_t tied_answers = 0;
    for (const auto& a : vr.entries) {
        if (a.entity == entity) continue;
        if (a.better < e.better)
            ++better_answers;
        else if (a.better == e.better)
            ++tied_answers;
    }
    std::int64_t better = e.better - better_answers;
    std::int64_t tied = e.tied - tied_answers;
    if (better < 0 || tied < 0)
        throw ContractError("ranking counts conflict with the recorded answers");
    return 1 + better + tied;
}

std::int64_t joint_rank_k2(std::int64_t r1, std::int64_t r2) {
    if (r1 < 1 || r2 < 1) throw ContractError("component ranks start at 1");
    if (r1 > 1000000000 || r2 > 1000000000)
        throw ContractError("component ranks exceed the closed-form range");
    std::int64_t n = r1 + r2 - 1;
    return n * (n - 1) / 2 + r1;
}

std::optional<MetricVector> marginal_metrics(const GroundedSample& s,
                                             const SampleRanking& r,
                                             const std::vector<int>& ks) {
    check_pair(s, r);
    if (s.marginal_hard.size() != s.query.free_vars.size())
        throw SchemaError("sample lists the wrong number of marginal sets");
    MetricVector acc = zeroed(ks);
    int active = 0;
    for (std::size_t i = 0; i < s.marginal_hard.size(); ++i) {
        const auto& hard = s.marginal_hard[i];
        if (hard.empty()) continue;
        MetricVector var_sum = zeroed(ks);
        for (EntityId a : hard) {
            auto fr = filtered_rank(r.vars[i], a);
            var_sum.mrr += 1.0 / static_cast<double>(fr);
            for (int k : ks)
                if (fr <= k) var_sum.hit[k] += 1.0;
        }
        double inv = 1.0 / static_cast<double>(hard.size());
        acc.mrr += var_sum.mrr * inv;
        for (int k : ks) acc.hit[k] += var_sum.hit[k] * inv;
        ++active;
    }
    if (active == 0) return std::nullopt;
    acc.mrr /= active;
    for (int k : ks) acc.hit[k] /= active;
    return acc;
}

MetricVector multiply_metrics(const GroundedSample& s, const SampleRanking& r,
                              const std::vector<int>& ks) {
    check_pair(s, r);
    const auto& hard = s.hard_answers.tuples;
    if (hard.empty())
        throw ContractError("multiply metrics need a hard answer");
    MetricVector out = zeroed(ks);
    for (const auto& t : hard) {
        std::int64_t worst = 0;
        for (std::size_t i = 0; i < t.size(); ++i)
            worst = std::max(worst, filtered_rank(r.vars[i], t[i]));
        for (int k : ks)
            if (worst <= k) out.hit[k] += 1.0;
    }
    for (int k : ks) out.hit[k] /= static_cast<double>(hard.size());
    return out;
}

MetricVector joint_metrics(const GroundedSample& s, const SampleRanking& r,
                           const std::vector<int>& ks) {
    check_pair(s, r);
    if (s.query.free_vars.size() != 2)
        throw SchemaError("joint metrics are defined for two free variables");
    const auto& hard = s.hard_answers.tuples;
    if (hard.empty()) throw ContractError("joint metrics need a hard answer");
    std::map<AnswerTuple, std::int64_t> joint;
    for (const AnswerSet* as : {&s.easy_answers, &s.hard_answers})
        for (const auto& t : as->tuples)
            joint.emplace(t, joint_rank_k2(find_entry(r.vars[0], t[0]).rank,
                                           find_entry(r.vars[1], t[1]).rank));
    MetricVector out = zeroed(ks);
    for (const auto& t : hard) {
        std::int64_t mine = joint.at(t);
        std::int64_t ahead = 0;
        for (const auto& kv : joint)
            if (kv.second < mine) ++ahead;
        std::int64_t fr = mine - ahead;
        if (fr < 1)
            throw ContractError("joint ranks conflict with the recorded answers");
        out.mrr += 1.0 / static_cast<double>(fr);
        for (int k : ks)
            if (fr <= k) out.hit[k] += 1.0;
    }
    out.mrr /= static_cast<double>(hard.size());
    for (int k : ks) out.hit[k] /= static_cast<double>(hard.size());
    return out;
}

QueryMetrics evaluate_query(const GroundedSample& s, const SampleRanking& r,
                            const std::vector<int>& ks, bool with_joint) {
    QueryMetrics out;
    out.formula_id = s.formula_id;
    out.sample_index = s.sample_index;
    out.marginal = marginal_metrics(s, r, ks);
    out.multiply = multiply_metrics(s, r, ks);
    if (with_joint && s.query.free_vars.size() == 2)
        out.joint = joint_metrics(s, r, ks);
    return out;
}

namespace {

struct Accum {
    int n = 0;
    double mrr = 0.0;
    std::map<int, double> hit;

    void add(const MetricVector& m, const std::vector<int>& ks) {
        mrr += m.mrr;
        for (int k : ks) hit[k] += m.hit.at(k);
        ++n;
    }

    std::optional<MetricVector> mean(const std::vector<int>& ks) const {
        if (n == 0) return std::nullopt;
        MetricVector m;
        m.mrr = mrr / n;
        for (int k : ks) m.hit[k] = hit.at(k) / n;
        return m;
    }
};

struct GroupAgg {
    int types = 0;
    int queries = 0;
    int skipped = 0;
    Accum marginal, multiply, joint;
};

json metric_json(const MetricVector& m, const std::vector<int>& ks,
                 bool with_mrr) {
    json hit = json::object();
    for (int k : ks) hit[std::to_string(k)] = m.hit.at(k);
    json out{{"hit", std::move(hit)}};
    if (with_mrr) out["mrr"] = m.mrr;
    return out;
}

void fill_metrics(json& row, const GroupAgg& agg, const std::vector<int>& ks) {
    if (auto m = agg.marginal.mean(ks)) row["marginal"] = metric_json(*m, ks, true);
    if (auto m = agg.multiply.mean(ks)) row["multiply"] = metric_json(*m, ks, false);
    if (auto m = agg.joint.mean(ks)) row["joint"] = metric_json(*m, ks, true);
}

}  // namespace

EvalReport aggregate(const std::vector<QueryMetrics>& queries,
                     const std::map<std::string, TypeCell>& cells_by_type,
                     const std::vector<int>& ks) {
    struct TypeAgg {
        int queries = 0;
        int skipped = 0;
        Accum marginal, multiply, joint;
    };
    std::map<std::string, TypeAgg> types;
    for (const auto& q : queries) {
        if (!cells_by_type.count(q.formula_id))
            throw ContractError("no cell mapping for " + q.formula_id);
        auto& t = types[q.formula_id];
        ++t.queries;
        if (q.marginal)
            t.marginal.add(*q.marginal, ks);
        else
            ++t.skipped;
        if (q.multiply) t.multiply.add(*q.multiply, ks);
        if (q.joint) t.joint.add(*q.joint, ks);
    }
    std::map<TypeCell, GroupAgg> cells;
    for (const auto& [fid, t] : types) {
        auto& c = cells[cells_by_type.at(fid)];
        ++c.types;
        c.queries += t.queries;
        c.skipped += t.skipped;
        if (auto m = t.marginal.mean(ks)) c.marginal.add(*m, ks);
        if (auto m = t.multiply.mean(ks)) c.multiply.add(*m, ks);
        if (auto m = t.joint.mean(ks)) c.joint.add(*m, ks);
    }
    EvalReport rep;
    rep.ks = ks;
    for (const auto& [cell, agg] : cells) {
        CellReport cr;
        cr.cell = cell;
        cr.type_count = agg.types;
        cr.query_count = agg.queries;
        cr.marginal_skipped = agg.skipped;
        cr.marginal = agg.marginal.mean(ks);
        cr.multiply = agg.multiply.mean(ks);
        cr.joint = agg.joint.mean(ks);
        rep.cells.push_back(std::move(cr));
    }
    return rep;
}

std::string report_to_json(const EvalReport& rep) {
    json cells = json::array();
    std::map<std::pair<int, int>, GroupAgg> by_c, by_e;
    for (const auto& cr : rep.cells) {
        json row{{"k", cr.cell.k},
                 {"c", cr.cell.c},
                 {"e", cr.cell.e},
                 {"topology", topology_name(cr.cell.topo)},
                 {"types", cr.type_count},
                 {"queries", cr.query_count},
                 {"marginal_skipped", cr.marginal_skipped}};
        if (cr.marginal) row["marginal"] = metric_json(*cr.marginal, rep.ks, true);
        if (cr.multiply) row["multiply"] = metric_json(*cr.multiply, rep.ks, false);
        if (cr.joint) row["joint"] = metric_json(*cr.joint, rep.ks, true);
        cells.push_back(std::move(row));
        for (auto* group : {&by_c, &by_e}) {
            auto key = group == &by_c ? std::pair{cr.cell.k, cr.cell.c}
                                      : std::pair{cr.cell.k, cr.cell.e};
            auto& agg = (*group)[key];
            ++agg.types;
            agg.queries += cr.query_count;
            if (cr.marginal) agg.marginal.add(*cr.marginal, rep.ks);
            if (cr.multiply) agg.multiply.add(*cr.multiply, rep.ks);
            if (cr.joint) agg.joint.add(*cr.joint, rep.ks);
        }
    }
    auto averages = [&](const std::map<std::pair<int, int>, GroupAgg>& group,
                        const char* label) {
        json rows = json::array();
        for (const auto& [key, agg] : group) {
            json row{{"k", key.first}, {label, key.second},
                     {"cells", agg.types}, {"queries", agg.queries}};
            fill_metrics(row, agg, rep.ks);
            rows.push_back(std::move(row));
        }
        return rows;
    };
    json j{{"hits", rep.ks},
           {"cells", std::move(cells)},
           {"averages",
            {{"by_c", averages(by_c, "c")}, {"by_e", averages(by_e, "e")}}}};
    return j.dump(2);
}

bool is_tree_form(const AbstractQueryGraph& g) {
    if (g.count_kind(NodeKind::Free) != 1) return false;
    for (const auto& e : g.edges)
        if (e.neg) return false;
    if (classify_topology(g) != Topology::SDAG) return false;
    std::vector<int> degree(g.kinds.size(), 0);
    for (const auto& e : g.edges) {
        ++degree[e.u];
        ++degree[e.v];
    }
    for (int n = 0; n < g.num_nodes(); ++n)
        if (g.kinds[n] == NodeKind::Existential && degree[n] <= 1) return false;
    return true;
}

SanityReport crisp_sanity_eval(const std::vector<GroundedSample>& samples,
                               const KnowledgeGraph& observed) {
    auto ops = crisp_ops(observed);
    SanityReport rep;
    for (const auto& s : samples) {
        auto shape = shape_of(s.query);
        if (!is_tree_form(shape.graph)) continue;
        ++rep.checked;
        auto states = execute(s.query, order_nodes(shape.graph), *ops);
        int v = s.query.free_vars.front();
        bool ok = true;
        for (const auto& t : s.easy_answers.tuples)
            if (ops->score(states.at(v), t[0]) != 1.0) {
                ok = false;
                break;
            }
        if (ok) ++rep.passed;
    }
    return rep;
}

}  // namespace efoq
