#pragma once

#include <algorithm>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "pathan/causal_model.hpp"
#include "pathan/dataset.hpp"
#include "pathan/estimator.hpp"

namespace pathan {

// Declaration order is also the sort order of steps within traces.
enum class Direction { Forward, Covariance, Backward };
enum class TraceClass { Direct, Indirect, Spurious };

constexpr std::string_view to_string(Direction d) {
    switch (d) {
    case Direction::Forward: return "forward";
    case Direction::Covariance: return "covariance";
    case Direction::Backward: return "backward";
    }
    return "forward";
}

constexpr std::string_view to_string(TraceClass c) {
    switch (c) {
    case TraceClass::Direct: return "D";
    case TraceClass::Indirect: return "I";
    case TraceClass::Spurious: return "S";
    }
    return "S";
}

struct TraceStep {
    std::string from;
    std::string to;
    Direction direction = Direction::Forward;
    double weight = 0.0;
};

/// One admissible walk under the tracing rules. Walks are oriented so that
/// every backward step precedes every forward step.
struct Trace {
    std::vector<TraceStep> steps;
    TraceClass kind = TraceClass::Spurious;
    double product = 1.0;

    /// e.g. "X3 <- X1 -> Y" or "A <-> B -> C".
    std::string describe() const {
        if (steps.empty()) return {};
        std::string out = steps.front().from;
        for (const auto &s : steps) {
            switch (s.direction) {
            case Direction::Forward: out += " -> "; break;
            case Direction::Backward: out += " <- "; break;
            case Direction::Covariance: out += " <-> "; break;
            }
            out += s.to;
        }
        return out;
    }
};

struct Decomposition {
    std::string first;
    std::string second;
    std::vector<Trace> traces;
    double reproduced = 0.0;
};

namespace detail {

class TraceWalker {
public:
    TraceWalker(const PathWeights &w, const std::string &target) : w_(w), target_(target) {}

    std::vector<Trace> run(const std::string &start) {
        visited_.assign(w_.graph.variables.size(), false);
        mark(start, true);
        walk(start, true);
        return std::move(found_);
    }

private:
    void mark(const std::string &v, bool on) { visited_[static_cast<std::size_t>(w_.graph.index_of(v))] = on; }
    bool seen(const std::string &v) const { return visited_[static_cast<std::size_t>(w_.graph.index_of(v))]; }

    void step(const std::string &from, const std::string &to, Direction dir, double weight, bool may_reverse) {
        if (seen(to)) return;
        steps_.push_back({from, to, dir, weight});
        mark(to, true);
        walk(to, may_reverse);
        mark(to, false);
        steps_.pop_back();
    }

    // may_reverse: no forward or covariance step taken yet
    void walk(const std::string &cur, bool may_reverse) {
        if (cur == target_) {
            Trace t;
            t.steps = steps_;
            found_.push_back(std::move(t));
            return;
        }
        const auto &g = w_.graph;
        if (may_reverse) {
            for (const auto &p : g.parents(cur)) step(cur, p, Direction::Backward, w_.edge_weight(p, cur), true);
            for (const auto &c : g.covary) {
                if (c.first == cur) step(cur, c.second, Direction::Covariance, w_.covary_weight(cur, c.second), false);
                if (c.second == cur) step(cur, c.first, Direction::Covariance, w_.covary_weight(cur, c.first), false);
            }
        }
        for (const auto &child : g.children(cur)) step(cur, child, Direction::Forward, w_.edge_weight(cur, child), false);
    }

    const PathWeights &w_;
    std::string target_;
    std::vector<bool> visited_;
    std::vector<TraceStep> steps_;
    std::vector<Trace> found_;
};

inline TraceClass classify(const Trace &t) {
    const bool causal = std::all_of(t.steps.begin(), t.steps.end(),
                                    [](const TraceStep &s) { return s.direction == Direction::Forward; });
    if (!causal) return TraceClass::Spurious;
    return t.steps.size() == 1 ? TraceClass::Direct : TraceClass::Indirect;
}

} // namespace detail

/// Every trace between i and j, sorted lexicographically by step sequence.
/// Traces start at i unless j is an ancestor of i, in which case they start
/// at j so causal traces always read forward.
inline std::vector<Trace> enumerate_traces(const PathWeights &w, const std::string &i, const std::string &j) {
    const auto &g = w.graph;
    for (const auto &v : {i, j}) {
        if (!g.has_variable(v)) throw Error(ErrorCode::UnknownVariable, "'" + v + "' is not in the model");
    }
    if (i == j) throw Error(ErrorCode::InvalidArgument, "trace endpoints must differ");
    if (w.edge.size() != g.edges.size() || w.covary.size() != g.covary.size())
        throw Error(ErrorCode::MissingCoefficient, "weights do not cover the graph");

    const bool swap = g.is_ancestor(j, i);
    const auto &start = swap ? j : i;
    const auto &target = swap ? i : j;
    auto traces = detail::TraceWalker(w, target).run(start);

    for (auto &t : traces) {
        t.kind = detail::classify(t);
        t.product = 1.0;
        for (const auto &s : t.steps) t.product *= s.weight;
    }
    auto key = [&](const Trace &t) {
        std::vector<std::pair<int, std::ptrdiff_t>> k;
        for (const auto &s : t.steps) k.emplace_back(static_cast<int>(s.direction), g.index_of(s.to));
        return k;
    };
    std::sort(traces.begin(), traces.end(), [&](const Trace &a, const Trace &b) { return key(a) < key(b); });
    return traces;
}

inline std::vector<Trace> enumerate_traces(const FittedModel &m, const std::string &i, const std::string &j) {
    return enumerate_traces(m.weights(), i, j);
}

inline Decomposition reproduced_correlation(const PathWeights &w, const std::string &i, const std::string &j) {
    Decomposition d{i, j, enumerate_traces(w, i, j), 0.0};
    for (const auto &t : d.traces) d.reproduced += t.product;
    return d;
}

inline Decomposition reproduced_correlation(const FittedModel &m, const std::string &i, const std::string &j) {
    return reproduced_correlation(m.weights(), i, j);
}

/// Decompositions for every unordered pair as (earlier, later) in
/// declaration order: (v0,v1), (v0,v2), ..., (v1,v2), ...
inline std::vector<Decomposition> all_decompositions(const PathWeights &w) {
    std::vector<Decomposition> out;
    const auto &vars = w.graph.variables;
    for (std::size_t a = 0; a < vars.size(); ++a)
        for (std::size_t b = a + 1; b < vars.size(); ++b) out.push_back(reproduced_correlation(w, vars[a], vars[b]));
    return out;
}

/// Sum of trace products for every pair, in declaration order.
inline CorrelationMatrix reproduced_matrix(const PathWeights &w, std::size_t n = 0) {
    validate_graph(w.graph);
    const auto &vars = w.graph.variables;
    const auto p = static_cast<Eigen::Index>(vars.size());
    CorrelationMatrix out;
    out.names = vars;
    out.n = n;
    out.r = Eigen::MatrixXd::Identity(p, p);
    for (Eigen::Index a = 0; a < p; ++a) {
        for (Eigen::Index b = a + 1; b < p; ++b) {
            const double v = reproduced_correlation(w, vars[a], vars[b]).reproduced;
            out.r(a, b) = out.r(b, a) = v;
        }
    }
    return out;
}

inline CorrelationMatrix reproduced_matrix(const FittedModel &m) {
    return reproduced_matrix(m.weights(), m.correlation.n);
}

/// Model-implied correlations by the recursive rule
/// r(i, j) = sum over parents k of j of beta(j, k) * r(i, k), visiting
/// exogenous variables first and then endogenous ones in topological order.
/// Shares no code with the trace enumeration.
inline CorrelationMatrix implied_oracle(const PathWeights &w, std::size_t n = 0) {
    const auto &g = w.graph;
    auto endogenous = validate_graph(g);
    std::vector<std::string> order;
    for (const auto &v : g.variables) {
        if (g.is_exogenous(v)) order.push_back(v);
    }
    const auto n_exo = order.size();
    order.insert(order.end(), endogenous.begin(), endogenous.end());

    const auto p = static_cast<Eigen::Index>(order.size());
    std::vector<Eigen::Index> pos(order.size());
    for (std::size_t k = 0; k < order.size(); ++k) pos[static_cast<std::size_t>(g.index_of(order[k]))] = static_cast<Eigen::Index>(k);

    Eigen::MatrixXd r = Eigen::MatrixXd::Identity(p, p);
    for (std::size_t k = 0; k < g.covary.size(); ++k) {
        const auto ia = pos[static_cast<std::size_t>(g.index_of(g.covary[k].first))];
        const auto ib = pos[static_cast<std::size_t>(g.index_of(g.covary[k].second))];
        r(ia, ib) = r(ib, ia) = w.covary[k];
    }
    for (Eigen::Index jj = static_cast<Eigen::Index>(n_exo); jj < p; ++jj) {
        const auto &j = order[static_cast<std::size_t>(jj)];
        for (Eigen::Index ii = 0; ii < jj; ++ii) {
            double sum = 0.0;
            for (std::size_t e = 0; e < g.edges.size(); ++e) {
                if (g.edges[e].effect != j) continue;
                const auto kk = pos[static_cast<std::size_t>(g.index_of(g.edges[e].cause))];
                sum += w.edge[e] * r(ii, kk);
            }
            r(ii, jj) = r(jj, ii) = sum;
        }
    }

    CorrelationMatrix out;
    out.names = g.variables;
    out.n = n;
    out.r.resize(p, p);
    for (Eigen::Index a = 0; a < p; ++a)
        for (Eigen::Index b = 0; b < p; ++b) out.r(a, b) = r(pos[static_cast<std::size_t>(a)], pos[static_cast<std::size_t>(b)]);
    return out;
}

inline CorrelationMatrix implied_oracle(const FittedModel &m) { return implied_oracle(m.weights(), m.correlation.n); }

} // namespace pathan
