#include "efoq/reason.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <set>

#include "efoq/error.hpp"

namespace efoq {

namespace {

std::vector<std::set<int>> neighbor_sets(const AbstractQueryGraph& g) {
    std::vector<std::set<int>> nbr(g.num_nodes());
    for (const auto& e : g.edges) {
        nbr[e.u].insert(e.v);
        nbr[e.v].insert(e.u);
    }
    return nbr;
}

// Sum over all free variables of the hop distance to node, on the full graph.
std::vector<long> free_distance_sums(const AbstractQueryGraph& g,
                                     const std::vector<std::set<int>>& nbr) {
    std::vector<long> sums(g.num_nodes(), 0);
    for (int fv = 0; fv < g.num_nodes(); ++fv) {
        if (g.kinds[fv] != NodeKind::Free) continue;
        std::vector<int> dist(g.num_nodes(), -1);
        std::deque<int> queue{fv};
        dist[fv] = 0;
        while (!queue.empty()) {
            int u = queue.front();
            queue.pop_front();
            for (int v : nbr[u])
                if (dist[v] < 0) {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
        }
        for (int n = 0; n < g.num_nodes(); ++n) sums[n] += dist[n];
    }
    return sums;
}

}  // namespace

NodeOrdering order_nodes(const AbstractQueryGraph& g) {
    g.validate();
    auto nbr = neighbor_sets(g);
    auto remoteness = free_distance_sums(g, nbr);

    NodeOrdering order;
    std::set<int> s1, s2, s3;
    for (int n = 0; n < g.num_nodes(); ++n) {
        if (g.kinds[n] != NodeKind::Constant) continue;
        order.push_back(n);
        s3.insert(n);
        for (int j : nbr[n]) {
            (g.kinds[j] == NodeKind::Existential ? s1 : s2).insert(j);
            s3.insert(j);
        }
    }

    while (order.size() < static_cast<std::size_t>(g.num_nodes())) {
        int next = -1;
        if (!s1.empty()) {
            for (int n : s1)
                if (next < 0 || remoteness[n] > remoteness[next]) next = n;
            s1.erase(next);
        } else if (!s2.empty()) {
            next = *s2.begin();
            s2.erase(next);
        } else {
            throw ContractError("node ordering needs a constant to start from");
        }
        s3.insert(next);
        for (int j : nbr[next])
            if (!s3.count(j))
                (g.kinds[j] == NodeKind::Existential ? s1 : s2).insert(j);
        order.push_back(next);
    }
    return order;
}

QueryShape shape_of(const GroundedQueryGraph& q) {
    std::set<int> vars;
    std::size_t const_occurrences = 0;
    for (const auto& e : q.edges) {
        for (const Term* t : {&e.h, &e.t}) {
            if (t->is_const)
                ++const_occurrences;
            else
                vars.insert(static_cast<int>(t->id));
        }
    }
    for (int fv : q.free_vars) vars.insert(fv);

    int total = static_cast<int>(vars.size() + const_occurrences);
    for (int v : vars)
        if (v >= total)
            throw SchemaError("variable ids leave no room for constant nodes");
    std::deque<int> gaps;
    for (int n = 0; n < total; ++n)
        if (!vars.count(n)) gaps.push_back(n);

    QueryShape shape;
    shape.graph.kinds.assign(total, NodeKind::Constant);
    std::set<int> frees(q.free_vars.begin(), q.free_vars.end());
    for (int v : vars)
        shape.graph.kinds[v] =
            frees.count(v) ? NodeKind::Free : NodeKind::Existential;

    auto place = [&](const Term& t) {
        if (!t.is_const) return static_cast<int>(t.id);
        int node = gaps.front();
        gaps.pop_front();
        shape.const_entities[node] = t.id;
        return node;
    };
    for (const auto& e : q.edges) {
        int u = place(e.h);
        int v = place(e.t);
        shape.graph.edges.push_back({u, v, e.neg});
    }
    shape.graph.validate();
    return shape;
}

std::map<int, StatePtr> execute(const GroundedQueryGraph& q,
                                const NodeOrdering& ordering,
                                const OperatorInterface& ops) {
    QueryShape shape = shape_of(q);
    std::set<int> covered(ordering.begin(), ordering.end());
    if (ordering.size() != static_cast<std::size_t>(shape.graph.num_nodes()) ||
        static_cast<int>(covered.size()) != shape.graph.num_nodes() ||
        (!covered.empty() &&
         (*covered.begin() < 0 || *covered.rbegin() >= shape.graph.num_nodes())))
        throw ContractError("ordering does not cover the query's nodes");

    std::vector<int> position(shape.graph.num_nodes());
    for (std::size_t i = 0; i < ordering.size(); ++i)
        position[ordering[i]] = static_cast<int>(i);

    std::map<int, StatePtr> states;
    for (int node : ordering) {
        if (shape.graph.kinds[node] == NodeKind::Constant) {
            states[node] = ops.entity_encode(shape.const_entities.at(node));
            continue;
        }
        std::vector<StatePtr> inputs;
        for (std::size_t ei = 0; ei < shape.graph.edges.size(); ++ei) {
            const auto& se = shape.graph.edges[ei];
            if (se.u != node && se.v != node) continue;
            int other = se.u == node ? se.v : se.u;
            if (position[other] > position[node]) continue;
            StatePtr in = states[other];
            if (!in) continue;
            RelationId r = q.edges[ei].r;
            if (other != se.u) r = inverse(r);
            inputs.push_back(se.neg ? ops.negated_projection(in, r)
                                    : ops.projection(in, r));
        }
        if (inputs.empty())
            states[node] = nullptr;
        else if (inputs.size() == 1)
            states[node] = inputs.front();
        else
            states[node] = ops.intersection(inputs);
    }

    for (int fv : q.free_vars)
        if (!states[fv])
            throw ExecutionError("free variable " + std::to_string(fv) +
                                 " ended without a state");
    return states;
}

namespace {

struct CrispState : ReasonerState {
    std::vector<EntityId> members;  // sorted
};

const CrispState& as_crisp(const StatePtr& s) {
    auto* c = dynamic_cast<const CrispState*>(s.get());
    if (!c) throw ContractError("state does not belong to the crisp backend");
    return *c;
}

class CrispOps final : public OperatorInterface {
  public:
    explicit CrispOps(const KnowledgeGraph& kg) : kg_(&kg) {}

    StatePtr entity_encode(EntityId e) const override {
        auto s = std::make_shared<CrispState>();
        s->members = {e};
        return s;
    }

    StatePtr projection(const StatePtr& s, RelationId r) const override {
        auto out = std::make_shared<CrispState>();
        std::set<EntityId> acc;
        for (EntityId m : as_crisp(s).members) {
            const auto& ts = kg_->tails(m, r);
            acc.insert(ts.begin(), ts.end());
        }
        out->members.assign(acc.begin(), acc.end());
        return out;
    }

    StatePtr negated_projection(const StatePtr& s,
                                RelationId r) const override {
        auto inner = projection(s, r);
        const auto& in = as_crisp(inner).members;
        auto out = std::make_shared<CrispState>();
        for (EntityId e = 0; e < kg_->num_entities(); ++e)
            if (!std::binary_search(in.begin(), in.end(), e))
                out->members.push_back(e);
        return out;
    }

    StatePtr intersection(const std::vector<StatePtr>& parts) const override {
        if (parts.empty()) throw ContractError("intersection of nothing");
        auto out = std::make_shared<CrispState>();
        out->members = as_crisp(parts.front()).members;
        for (std::size_t i = 1; i < parts.size(); ++i) {
            const auto& other = as_crisp(parts[i]).members;
            std::vector<EntityId> meet;
            std::set_intersection(out->members.begin(), out->members.end(),
                                  other.begin(), other.end(),
                                  std::back_inserter(meet));
            out->members = std::move(meet);
        }
        return out;
    }

    double score(const StatePtr& s, EntityId e) const override {
        const auto& m = as_crisp(s).members;
        return std::binary_search(m.begin(), m.end(), e) ? 1.0 : 0.0;
    }

    std::size_t num_entities() const override { return kg_->num_entities(); }

  private:
    const KnowledgeGraph* kg_;
};

}  // namespace

std::unique_ptr<OperatorInterface> crisp_ops(const KnowledgeGraph& kg) {
    return std::make_unique<CrispOps>(kg);
}

RankingTable rank(const std::map<int, StatePtr>& states,
                  const OperatorInterface& ops,
                  const std::vector<int>& free_vars) {
    RankingTable table;
    table.free_vars = free_vars;
    std::size_t n = ops.num_entities();
    for (int fv : free_vars) {
        auto it = states.find(fv);
        if (it == states.end() || !it->second)
            throw ContractError("free variable " + std::to_string(fv) +
                                " has no state to rank");
        std::vector<double> scores(n);
        for (EntityId e = 0; e < n; ++e) scores[e] = ops.score(it->second, e);
        std::vector<EntityId> order(n);
        std::iota(order.begin(), order.end(), 0u);
        std::sort(order.begin(), order.end(), [&](EntityId a, EntityId b) {
            if (scores[a] != scores[b]) return scores[a] > scores[b];
            return a < b;
        });
        table.order.push_back(std::move(order));
        table.scores.push_back(std::move(scores));
    }
    return table;
}

}  // namespace efoq
