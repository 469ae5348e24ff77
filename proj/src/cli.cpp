#include "efoq/cli.hpp"

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "efoq/enumerate.hpp"
#include "efoq/error.hpp"
#include "efoq/evaluate.hpp"
#include "efoq/ground.hpp"
#include "efoq/kg.hpp"
#include "efoq/query.hpp"
#include "efoq/reason.hpp"
#include "efoq/rng.hpp"
#include "efoq/solve.hpp"

namespace efoq {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

int resolve_workers(int flag) {
    if (flag > 0) return flag;
    if (const char* env = std::getenv("EFOQ_WORKERS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    return 1;
}

template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mu;
    auto body = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

// Applies fn to every non-empty line, rethrowing schema problems with the
// file position attached.
template <typename Fn>
void read_jsonl(const std::string& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) throw SchemaError(path + ": cannot open");
    std::string line;
    std::size_t no = 0;
    while (std::getline(in, line)) {
        ++no;
        if (line.empty()) continue;
        try {
            fn(line);
        } catch (const SchemaError& e) {
            throw SchemaError(path + ":" + std::to_string(no) + ": " +
                              e.what());
        }
    }
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw SchemaError(path + ": cannot write");
    return out;
}

KgPair load_kg_dir(const std::string& dir) {
    fs::path train = fs::path(dir) / "train.txt";
    if (!fs::exists(train))
        throw SchemaError(train.string() + ": missing train split");
    std::vector<std::string> paths{train.string()};
    for (const char* split : {"valid.txt", "test.txt"}) {
        fs::path p = fs::path(dir) / split;
        if (fs::exists(p)) paths.push_back(p.string());
    }
    return load_kg(paths);
}

std::vector<AbstractQueryGraph> read_types(const std::string& path) {
    std::vector<AbstractQueryGraph> types;
    read_jsonl(path, [&](const std::string& line) {
        types.push_back(abstract_from_json(line));
    });
    if (types.empty()) throw SchemaError(path + ": no types");
    return types;
}

std::vector<GroundedSample> read_samples(const std::string& path) {
    std::vector<GroundedSample> samples;
    read_jsonl(path, [&](const std::string& line) {
        samples.push_back(sample_from_json(line));
    });
    if (samples.empty()) throw SchemaError(path + ": no queries");
    return samples;
}

void emit_counts(std::ostream& os,
                 const std::vector<AbstractQueryGraph>& types) {
    std::map<TypeCell, int> counts;
    for (const auto& g : types) ++counts[cell_of(g)];
    std::set<int> ks;
    for (const auto& [cell, n] : counts) ks.insert(cell.k);
    const Topology topos[] = {Topology::SDAG, Topology::Multi,
                              Topology::Cyclic};
    for (int k : ks) {
        int k_total = 0;
        std::set<std::pair<int, int>> rows;
        for (const auto& [cell, n] : counts)
            if (cell.k == k) {
                rows.insert({cell.c, cell.e});
                k_total += n;
            }
        os << "k = " << k << " (" << k_total << " types)\n";
        os << std::setw(4) << "c" << std::setw(4) << "e";
        for (Topology t : topos) os << std::setw(8) << topology_name(t);
        os << std::setw(8) << "total" << '\n';
        std::map<Topology, int> col_total;
        for (const auto& [c, e] : rows) {
            os << std::setw(4) << c << std::setw(4) << e;
            int row_total = 0;
            for (Topology t : topos) {
                auto it = counts.find(TypeCell{k, c, e, t});
                if (it == counts.end()) {
                    os << std::setw(8) << '-';
                } else {
                    os << std::setw(8) << it->second;
                    row_total += it->second;
                    col_total[t] += it->second;
                }
            }
            os << std::setw(8) << row_total << '\n';
        }
        os << std::setw(8) << "all";
        for (Topology t : topos)
            if (col_total.count(t))
                os << std::setw(8) << col_total[t];
            else
                os << std::setw(8) << '-';
        os << std::setw(8) << k_total << "\n\n";
    }
    os << "total: " << types.size() << " types\n";
}

struct EnumerateArgs {
    EnumBudget budget;
    std::string profile = "reference";
    std::string out;
};

int cmd_enumerate(const EnumerateArgs& a) {
    auto types = enumerate_abstract(a.budget, profile_from_name(a.profile));
    auto out = open_out(a.out);
    for (const auto& g : types) out << abstract_to_json(g) << '\n';
    emit_counts(std::cout, types);
    std::cout << "wrote " << types.size() << " types to " << a.out << '\n';
    return 0;
}

int cmd_stats(const std::string& types_path) {
    emit_counts(std::cout, read_types(types_path));
    return 0;
}

struct GroundArgs {
    std::string kg_dir;
    std::string types;
    std::string out;
    SampleConfig cfg;
    int workers = 0;
};

int cmd_ground(const GroundArgs& a) {
    auto kgs = load_kg_dir(a.kg_dir);
    auto types = read_types(a.types);
    SampleConfig cfg = a.cfg;
    cfg.workers = resolve_workers(a.workers);
    auto run = sample_dataset(types, kgs, cfg);
    auto out = open_out(a.out);
    for (const auto& s : run.samples) out << sample_to_json(s) << '\n';
    auto dir = fs::path(a.out).parent_path();
    write_id_maps(kgs, dir.empty() ? "." : dir.string());
    std::cout << "emitted " << run.samples.size() << " samples to " << a.out
              << '\n';
    for (const auto& [fid, n] : run.shortfall)
        std::cout << "short " << fid << ": " << n << '\n';
    return 0;
}

struct SolveArgs {
    std::string kg_dir;
    std::string queries;
    std::string which = "full";
    std::string out;
    int workers = 0;
};

int cmd_solve(const SolveArgs& a) {
    auto kgs = load_kg_dir(a.kg_dir);
    const KnowledgeGraph& kg = a.which == "full" ? kgs.full : kgs.observed;
    auto samples = read_samples(a.queries);
    std::vector<std::string> lines(samples.size());
    parallel_for(samples.size(), resolve_workers(a.workers), [&](std::size_t i) {
        const auto& s = samples[i];
        AnswerSet answers = solve_efo(s.query, kg);
        json j{{"answers", answers.tuples},
               {"formula_id", s.formula_id},
               {"sample_index", s.sample_index}};
        lines[i] = j.dump();
    });
    auto out = open_out(a.out);
    for (const auto& line : lines) out << line << '\n';
    std::cout << "solved " << samples.size() << " queries on the " << a.which
              << " graph\n";
    return 0;
}

struct InferArgs {
    std::string kg_dir;
    std::string queries;
    std::string reasoner = "crisp";
    std::string which = "observed";
    std::string out;
    int workers = 0;
};

int cmd_infer(const InferArgs& a) {
    auto kgs = load_kg_dir(a.kg_dir);
    const KnowledgeGraph& kg = a.which == "full" ? kgs.full : kgs.observed;
    auto ops = crisp_ops(kg);
    auto samples = read_samples(a.queries);
    std::vector<std::string> lines(samples.size());
    parallel_for(samples.size(), resolve_workers(a.workers), [&](std::size_t i) {
        const auto& s = samples[i];
        auto shape = shape_of(s.query);
        auto states = execute(s.query, order_nodes(shape.graph), *ops);
        auto table = rank(states, *ops, s.query.free_vars);
        lines[i] = ranking_to_json(rank_sample(s, table));
    });
    auto out = open_out(a.out);
    for (const auto& line : lines) out << line << '\n';
    std::cout << "ranked " << samples.size() << " queries with the "
              << a.reasoner << " reasoner on the " << a.which << " graph\n";
    return 0;
}

struct EvaluateArgs {
    std::string rankings;
    std::string data;
    std::vector<std::string> metrics{"marginal", "multiply", "joint"};
    std::vector<int> hits{1, 3, 10};
    std::string out;
    std::string csv;
};

void write_csv(const std::string& path, const json& rep) {
    auto out = open_out(path);
    auto ks = rep["hits"].get<std::vector<int>>();
    out << "group,k,c,e,topology,types,cells,queries,marginal_skipped,"
           "marginal_mrr";
    for (int k : ks) out << ",marginal_hit_" << k;
    for (int k : ks) out << ",multiply_hit_" << k;
    out << ",joint_mrr";
    for (int k : ks) out << ",joint_hit_" << k;
    out << '\n';
    auto metric_cols = [&](const json& row, const char* name, bool with_mrr) {
        if (with_mrr) {
            out << ',';
            if (row.contains(name)) out << row[name]["mrr"].dump();
        }
        for (int k : ks) {
            out << ',';
            if (row.contains(name))
                out << row[name]["hit"][std::to_string(k)].dump();
        }
    };
    for (const auto& row : rep["cells"]) {
        out << "cell," << row["k"] << ',' << row["c"] << ',' << row["e"] << ','
            << row["topology"].get<std::string>() << ',' << row["types"]
            << ",," << row["queries"] << ',' << row["marginal_skipped"];
        metric_cols(row, "marginal", true);
        metric_cols(row, "multiply", false);
        metric_cols(row, "joint", true);
        out << '\n';
    }
    for (const char* group : {"by_c", "by_e"}) {
        bool is_c = group[3] == 'c';
        for (const auto& row : rep["averages"][group]) {
            out << (is_c ? "avg_c," : "avg_e,") << row["k"] << ',';
            if (is_c)
                out << row["c"] << ",,";
            else
                out << ',' << row["e"] << ',';
            out << ",," << row["cells"] << ',' << row["queries"] << ',';
            metric_cols(row, "marginal", true);
            metric_cols(row, "multiply", false);
            metric_cols(row, "joint", true);
            out << '\n';
        }
    }
}

int cmd_evaluate(const EvaluateArgs& a) {
    std::set<std::string> want(a.metrics.begin(), a.metrics.end());
    std::vector<int> ks(a.hits);
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());

    auto samples = read_samples(a.data);
    std::map<std::pair<std::string, int>, const GroundedSample*> by_key;
    for (const auto& s : samples)
        if (!by_key.emplace(std::pair{s.formula_id, s.sample_index}, &s).second)
            throw SchemaError(a.data + ": duplicate sample " + s.formula_id +
                              "/" + std::to_string(s.sample_index));

    std::map<std::pair<std::string, int>, SampleRanking> rankings;
    read_jsonl(a.rankings, [&](const std::string& line) {
        auto r = ranking_from_json(line);
        auto key = std::pair{r.formula_id, r.sample_index};
        if (!by_key.count(key))
            throw SchemaError("ranking for unknown sample " + r.formula_id +
                              "/" + std::to_string(r.sample_index));
        if (!rankings.emplace(key, std::move(r)).second)
            throw SchemaError("duplicate ranking " + r.formula_id + "/" +
                              std::to_string(r.sample_index));
    });

    if (want.count("joint")) {
        bool any_k2 = false;
        for (const auto& s : samples)
            any_k2 = any_k2 || s.query.free_vars.size() == 2;
        if (!any_k2)
            throw SchemaError(
                "joint metrics requested but no query has two free variables");
    }

    std::map<std::string, TypeCell> cells_by_type;
    std::vector<QueryMetrics> all;
    for (const auto& s : samples) {
        auto key = std::pair{s.formula_id, s.sample_index};
        auto it = rankings.find(key);
        if (it == rankings.end())
            throw SchemaError(a.rankings + ": no ranking for " + s.formula_id +
                              "/" + std::to_string(s.sample_index));
        const auto& r = it->second;
        if (!cells_by_type.count(s.formula_id))
            cells_by_type[s.formula_id] = cell_of(shape_of(s.query).graph);
        QueryMetrics qm;
        qm.formula_id = s.formula_id;
        qm.sample_index = s.sample_index;
        if (want.count("marginal")) qm.marginal = marginal_metrics(s, r, ks);
        if (want.count("multiply")) qm.multiply = multiply_metrics(s, r, ks);
        if (want.count("joint") && s.query.free_vars.size() == 2)
            qm.joint = joint_metrics(s, r, ks);
        all.push_back(std::move(qm));
    }

    auto rep = aggregate(all, cells_by_type, ks);
    auto text = report_to_json(rep);
    open_out(a.out) << text << '\n';
    if (!a.csv.empty()) write_csv(a.csv, json::parse(text));
    std::cout << "evaluated " << all.size() << " queries across "
              << rep.cells.size() << " cells\n";
    return 0;
}

struct VerifyArgs {
    bool oracle = false;
    int instances = 1000;
    int entities = 40;
    int relations = 5;
    std::uint64_t seed = 0;
};

int cmd_verify(const VerifyArgs& a) {
    auto types = enumerate_abstract(EnumBudget{});
    std::vector<PositiveSplit> splits;
    splits.reserve(types.size());
    for (const auto& g : types) splits.push_back(split_positive_subgraph(g));

    Rng root(a.seed);
    int done = 0, efo_bad = 0, csp_bad = 0, csp_run = 0;
    long attempts = 0;
    long max_attempts = static_cast<long>(a.instances) * 64;
    while (done < a.instances && attempts < max_attempts) {
        Rng rng = root.derive("verify/" + std::to_string(attempts));
        ++attempts;
        auto ne = static_cast<std::uint32_t>(8 + rng.below(a.entities - 7));
        auto nr = static_cast<std::uint32_t>(1 + rng.below(a.relations));
        std::vector<Triple> base;
        for (std::uint32_t i = 0; i < ne * 6; ++i)
            base.push_back({static_cast<EntityId>(rng.below(ne)),
                            static_cast<RelationId>(2 * rng.below(nr)),
                            static_cast<EntityId>(rng.below(ne))});
        KnowledgeGraph kg(ne, 2 * nr, base);
        std::size_t ti = rng.below(types.size());
        GroundedQueryGraph q;
        try {
            auto pg = ground_positive(types[ti], splits[ti], kg, rng);
            ground_negative(types[ti], splits[ti], pg, kg, rng);
            q = to_grounded(types[ti], pg.grounding);
        } catch (const ResourceError&) {
            continue;
        }
        ++done;
        AnswerSet got = solve_efo(q, kg);
        if (!(got == brute_force_oracle(q, kg))) {
            ++efo_bad;
            continue;
        }
        try {
            auto csp = solve_csp(q, kg);
            ++csp_run;
            std::vector<std::size_t> pos;
            for (int v : q.free_vars)
                pos.push_back(std::find(csp.var_ids.begin(), csp.var_ids.end(),
                                        v) -
                              csp.var_ids.begin());
            AnswerSet projected;
            projected.k = q.free_vars.size();
            for (const auto& row : csp.rows) {
                AnswerTuple t;
                for (std::size_t p : pos) t.push_back(row[p]);
                projected.tuples.insert(std::move(t));
            }
            if (!(projected == got)) ++csp_bad;
        } catch (const ResourceError&) {
        }
    }
    if (done < a.instances)
        throw ResourceError("grounded only " + std::to_string(done) + " of " +
                            std::to_string(a.instances) + " instances");
    int ok = done - efo_bad - csp_bad;
    std::printf("oracle agreement: %d/%d instances (%.1f%%)\n", ok, done,
                100.0 * ok / done);
    std::printf("csp projection checked on %d instances\n", csp_run);
    if (efo_bad || csp_bad) {
        std::cerr << "solver disagreements: oracle " << efo_bad << ", csp "
                  << csp_bad << '\n';
        return 3;
    }
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"EFO-k query pipeline over knowledge graphs"};
    app.set_config("--config", "",
                   "Read options from an INI file (keys match the flags)");

    EnumerateArgs en;
    auto* c_enum = app.add_subcommand(
        "enumerate", "Enumerate abstract query types within a budget");
    c_enum->add_option("--max-free", en.budget.max_free)->capture_default_str();
    c_enum->add_option("--max-exist", en.budget.max_exist)->capture_default_str();
    c_enum->add_option("--max-const", en.budget.max_const)->capture_default_str();
    c_enum->add_option("--max-nodes", en.budget.max_nodes)->capture_default_str();
    c_enum->add_option("--max-edges", en.budget.max_edges)->capture_default_str();
    c_enum->add_option("--max-extra-edges", en.budget.max_extra_edges)
        ->capture_default_str();
    c_enum->add_option("--max-neg-edges", en.budget.max_neg_edges)
        ->capture_default_str();
    c_enum->add_option("--max-dist-to-free", en.budget.max_dist_to_free)
        ->capture_default_str();
    c_enum->add_option("--profile", en.profile,
                       "Negation profile: reference, exhaustive, unfiltered")
        ->check(CLI::IsMember({"reference", "exhaustive", "unfiltered"}))
        ->capture_default_str();
    c_enum->add_option("-o,--out", en.out, "Types JSONL path")->required();

    std::string stats_path;
    auto* c_stats =
        app.add_subcommand("stats", "Print count matrices for a types file");
    c_stats->add_option("types", stats_path, "Types JSONL path")->required();

    GroundArgs gr;
    auto* c_ground = app.add_subcommand(
        "ground", "Sample grounded queries with easy and hard answers");
    c_ground->add_option("--kg", gr.kg_dir, "Directory with train/valid/test splits")
        ->required();
    c_ground->add_option("--types", gr.types, "Types JSONL path")->required();
    c_ground->add_option("--num-pos", gr.cfg.num_positive_type)
        ->capture_default_str();
    c_ground->add_option("--num-neg", gr.cfg.num_negative_type)
        ->capture_default_str();
    c_ground->add_option("--bound", gr.cfg.answer_bound_per_free)
        ->capture_default_str();
    c_ground->add_option("--seed", gr.cfg.seed)->capture_default_str();
    c_ground->add_option("--retries", gr.cfg.max_retries)->capture_default_str();
    c_ground->add_option("--workers", gr.workers,
                         "Worker threads (or EFOQ_WORKERS)");
    c_ground->add_option("-o,--out", gr.out, "Data JSONL path")->required();

    SolveArgs so;
    auto* c_solve =
        app.add_subcommand("solve", "Solve grounded queries exactly");
    c_solve->add_option("--kg", so.kg_dir)->required();
    c_solve->add_option("--queries", so.queries, "Data JSONL path")->required();
    c_solve->add_option("--which", so.which, "Graph: full or observed")
        ->check(CLI::IsMember({"full", "observed"}))
        ->capture_default_str();
    c_solve->add_option("--workers", so.workers);
    c_solve->add_option("-o,--out", so.out, "Answers JSONL path")->required();

    InferArgs in;
    auto* c_infer = app.add_subcommand(
        "infer", "Rank entities per free variable with a reasoner");
    c_infer->add_option("--kg", in.kg_dir)->required();
    c_infer->add_option("--queries", in.queries, "Data JSONL path")->required();
    c_infer->add_option("--reasoner", in.reasoner, "Reasoner backend")
        ->check(CLI::IsMember({"crisp"}))
        ->capture_default_str();
    c_infer->add_option("--which", in.which, "Graph: full or observed")
        ->check(CLI::IsMember({"full", "observed"}))
        ->capture_default_str();
    c_infer->add_option("--workers", in.workers);
    c_infer->add_option("-o,--out", in.out, "Rankings JSONL path")->required();

    EvaluateArgs ev;
    auto* c_eval = app.add_subcommand(
        "evaluate", "Score rankings against recorded answers");
    c_eval->add_option("--rankings", ev.rankings, "Rankings JSONL path")
        ->required();
    c_eval->add_option("--data", ev.data, "Data JSONL path")->required();
    c_eval->add_option("--metrics", ev.metrics,
                       "Metric families: marginal, multiply, joint")
        ->delimiter(',')
        ->check(CLI::IsMember({"marginal", "multiply", "joint"}));
    c_eval->add_option("--hits", ev.hits, "HIT thresholds")
        ->delimiter(',')
        ->check(CLI::PositiveNumber);
    c_eval->add_option("-o,--out", ev.out, "Report JSON path")->required();
    c_eval->add_option("--csv", ev.csv, "Optional CSV table path");

    VerifyArgs ve;
    auto* c_verify = app.add_subcommand(
        "verify", "Check the solver against brute-force oracles");
    c_verify->add_flag("--oracle", ve.oracle,
                       "Run the oracle equivalence suite");
    c_verify->add_option("--instances", ve.instances)
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    c_verify->add_option("--entities", ve.entities)
        ->check(CLI::Range(8, 100000))
        ->capture_default_str();
    c_verify->add_option("--relations", ve.relations)
        ->check(CLI::Range(1, 1000))
        ->capture_default_str();
    c_verify->add_option("--seed", ve.seed)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (c_enum->parsed()) return cmd_enumerate(en);
        if (c_stats->parsed()) return cmd_stats(stats_path);
        if (c_ground->parsed()) return cmd_ground(gr);
        if (c_solve->parsed()) return cmd_solve(so);
        if (c_infer->parsed()) return cmd_infer(in);
        if (c_eval->parsed()) return cmd_evaluate(ev);
        if (c_verify->parsed()) {
            if (!ve.oracle)
                throw SchemaError("verify needs --oracle (the only suite)");
            return cmd_verify(ve);
        }
        std::cerr << app.help();
        return 2;
    } catch (const SchemaError& e) {
        std::cerr << "schema error: " << e.what() << '\n';
        return 2;
    } catch (const ContractError& e) {
        std::cerr << "invariant breach: " << e.what() << '\n';
        return 3;
    } catch (const ResourceError& e) {
        std::cerr << "resource limit: " << e.what() << '\n';
        return 1;
    } catch (const ExecutionError& e) {
        std::cerr << "execution failure: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace efoq
