#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <set>
#include <string>
#include <vector>

#include "efoq/enumerate.hpp"
#include "efoq/error.hpp"
#include "efoq/evaluate.hpp"
#include "efoq/ground.hpp"
#include "efoq/kg.hpp"
#include "efoq/query.hpp"
#include "efoq/reason.hpp"
#include "efoq/solve.hpp"

namespace py = pybind11;
using namespace efoq;

namespace {

const KnowledgeGraph& pick(const KgPair& kg, const std::string& which) {
    if (which == "full") return kg.full;
    if (which == "observed") return kg.observed;
    throw SchemaError("which must be full or observed, not " + which);
}

std::vector<std::string> enumerate_lines(int max_free, int max_exist,
                                         int max_const, int max_nodes,
                                         int max_edges, int max_extra_edges,
                                         int max_neg_edges,
                                         int max_dist_to_free,
                                         const std::string& profile) {
    EnumBudget b;
    b.max_free = max_free;
    b.max_exist = max_exist;
    b.max_const = max_const;
    b.max_nodes = max_nodes;
    b.max_edges = max_edges;
    b.max_extra_edges = max_extra_edges;
    b.max_neg_edges = max_neg_edges;
    b.max_dist_to_free = max_dist_to_free;
    std::vector<std::string> lines;
    for (const auto& g : enumerate_abstract(b, profile_from_name(profile)))
        lines.push_back(abstract_to_json(g));
    return lines;
}

py::tuple sample_lines(const std::vector<std::string>& types,
                       const KgPair& kg, int num_pos, int num_neg, int bound,
                       std::uint64_t seed, int retries, int workers) {
    std::vector<AbstractQueryGraph> parsed;
    for (const auto& line : types) parsed.push_back(abstract_from_json(line));
    SampleConfig cfg;
    cfg.num_positive_type = num_pos;
    cfg.num_negative_type = num_neg;
    cfg.answer_bound_per_free = bound;
    cfg.seed = seed;
    cfg.max_retries = retries;
    cfg.workers = workers;
    auto run = sample_dataset(parsed, kg, cfg);
    std::vector<std::string> lines;
    for (const auto& s : run.samples) lines.push_back(sample_to_json(s));
    return py::make_tuple(lines, run.shortfall);
}

std::vector<AnswerTuple> solve_line(const std::string& sample,
                                    const KgPair& kg,
                                    const std::string& which) {
    auto got = solve_efo(sample_from_json(sample).query, pick(kg, which));
    return {got.tuples.begin(), got.tuples.end()};
}

std::string infer_line(const std::string& sample, const KgPair& kg,
                       const std::string& which) {
    GroundedSample s = sample_from_json(sample);
    auto ops = crisp_ops(pick(kg, which));
    auto shape = shape_of(s.query);
    auto table =
        rank(execute(s.query, order_nodes(shape.graph), *ops), *ops,
             s.query.free_vars);
    return ranking_to_json(rank_sample(s, table));
}

std::string evaluate_lines(const std::vector<std::string>& rankings,
                           const std::vector<std::string>& samples,
                           std::vector<int> hits,
                           const std::set<std::string>& metrics) {
    if (rankings.size() != samples.size())
        throw SchemaError("rankings and samples must pair up one to one");
    for (const auto& m : metrics)
        if (m != "marginal" && m != "multiply" && m != "joint")
            throw SchemaError("unknown metric family " + m);
    std::sort(hits.begin(), hits.end());
    hits.erase(std::unique(hits.begin(), hits.end()), hits.end());

    bool any_k2 = false;
    std::map<std::string, TypeCell> cells;
    std::vector<QueryMetrics> all;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        GroundedSample s = sample_from_json(samples[i]);
        SampleRanking r = ranking_from_json(rankings[i]);
        any_k2 = any_k2 || s.query.free_vars.size() == 2;
        if (!cells.count(s.formula_id))
            cells[s.formula_id] = cell_of(shape_of(s.query).graph);
        QueryMetrics qm;
        qm.formula_id = s.formula_id;
        qm.sample_index = s.sample_index;
        if (metrics.count("marginal")) qm.marginal = marginal_metrics(s, r, hits);
        if (metrics.count("multiply")) qm.multiply = multiply_metrics(s, r, hits);
        if (metrics.count("joint") && s.query.free_vars.size() == 2)
            qm.joint = joint_metrics(s, r, hits);
        all.push_back(std::move(qm));
    }
    if (metrics.count("joint") && !any_k2)
        throw SchemaError(
            "joint metrics requested but no query has two free variables");
    return report_to_json(aggregate(all, cells, hits));
}

}  // namespace

PYBIND11_MODULE(efoq, m) {
    m.doc() = "EFO-k query pipeline: enumerate, ground, solve, rank, score";

    py::register_exception<SchemaError>(m, "SchemaError", PyExc_ValueError);

    py::class_<KgPair>(m, "KgPair",
                       "Observed and full graphs with the label tables")
        .def_property_readonly(
            "num_entities",
            [](const KgPair& kg) { return kg.full.num_entities(); })
        .def_property_readonly(
            "num_relations",
            [](const KgPair& kg) { return kg.full.num_relations(); })
        .def_property_readonly(
            "observed_triples",
            [](const KgPair& kg) { return kg.observed.num_triples(); })
        .def_property_readonly(
            "full_triples",
            [](const KgPair& kg) { return kg.full.num_triples(); });

    m.def("load_kg", &load_kg, py::arg("paths"),
          "Load tab-separated triple files; the first is the observed split, "
          "the rest extend the full graph.");

    m.def("enumerate_types", &enumerate_lines, py::arg("max_free") = 2,
          py::arg("max_exist") = 2, py::arg("max_const") = 3,
          py::arg("max_nodes") = 6, py::arg("max_edges") = 6,
          py::arg("max_extra_edges") = 0, py::arg("max_neg_edges") = 1,
          py::arg("max_dist_to_free") = 3, py::arg("profile") = "reference",
          "Abstract query types within the budget, one JSON line each.");

    m.def("sample_dataset", &sample_lines, py::arg("types"), py::arg("kg"),
          py::arg("num_pos") = 1000, py::arg("num_neg") = 500,
          py::arg("bound") = 100, py::arg("seed") = 0,
          py::arg("retries") = 128, py::arg("workers") = 1,
          "Grounded samples for each type as JSON lines, plus the per-type "
          "shortfall map.");

    m.def("solve", &solve_line, py::arg("sample"), py::arg("kg"),
          py::arg("which") = "full",
          "Exact answer tuples of one sample's query.");

    m.def("infer", &infer_line, py::arg("sample"), py::arg("kg"),
          py::arg("which") = "observed",
          "Rank one sample with the crisp reasoner; returns the ranking "
          "JSON line.");

    m.def("evaluate", &evaluate_lines, py::arg("rankings"), py::arg("samples"),
          py::arg("hits") = std::vector<int>{1, 3, 10},
          py::arg("metrics") =
              std::set<std::string>{"marginal", "multiply", "joint"},
          "Score rankings against their samples (paired by position) and "
          "return the report JSON.");

    m.def("joint_rank", &joint_rank_k2, py::arg("r1"), py::arg("r2"),
          "Closed-form joint rank of a two-variable answer from its "
          "per-variable ranks.");

    m.attr("__version__") = "0.1.0";
}
