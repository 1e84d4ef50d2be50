#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pathan/causal_model.hpp"
#include "pathan/dataset.hpp"
#include "pathan/estimator.hpp"
#include "pathan/tracer.hpp"

namespace pathan {

inline constexpr double default_fit_threshold = 0.05;

struct FlaggedCell {
    std::string row;
    std::string col;
    double observed = 0.0;
    double reproduced = 0.0;
    double diff = 0.0;
};

/// Observed against model-implied correlations, cell by cell.
struct FitReport {
    CorrelationMatrix observed;
    CorrelationMatrix reproduced;
    Eigen::MatrixXd diffs;
    double threshold = default_fit_threshold;
    std::vector<FlaggedCell> flagged; // lower triangle, row-major
    bool consistent = true;

    double max_diff() const { return diffs.size() ? diffs.maxCoeff() : 0.0; }

    bool is_flagged(const std::string &a, const std::string &b) const {
        return std::any_of(flagged.begin(), flagged.end(), [&](const FlaggedCell &c) {
            return (c.row == a && c.col == b) || (c.row == b && c.col == a);
        });
    }
};

/// Flags every cell whose absolute difference exceeds threshold. Observed is
/// restricted to the reproduced variables.
inline FitReport compare_correlations(const CorrelationMatrix &observed, const CorrelationMatrix &reproduced,
                                      double threshold = default_fit_threshold) {
    if (!(threshold > 0.0)) throw Error(ErrorCode::InvalidArgument, "fit threshold must be positive");
    FitReport rep;
    rep.observed = select(observed, reproduced.names);
    rep.reproduced = reproduced;
    rep.threshold = threshold;
    rep.diffs = (rep.observed.r - reproduced.r).cwiseAbs();
    const auto p = rep.diffs.rows();
    for (Eigen::Index i = 0; i < p; ++i) {
        rep.diffs(i, i) = 0.0;
        for (Eigen::Index j = 0; j < i; ++j) {
            const double d = rep.diffs(i, j);
            rep.diffs(j, i) = d;
            if (d > threshold)
                rep.flagged.push_back({reproduced.names[i], reproduced.names[j], rep.observed.r(i, j),
                                       reproduced.r(i, j), d});
        }
    }
    rep.consistent = rep.flagged.empty();
    return rep;
}

inline FitReport fit_report(const FittedModel &m, double threshold = default_fit_threshold) {
    return compare_correlations(m.correlation, reproduced_matrix(m), threshold);
}

/// User-supplied path values, used to recompute decompositions from values taken elsewhere.
struct ReplayCoefficients {
    std::vector<std::pair<Edge, double>> directed;
    std::vector<std::pair<Covary, double>> covary;
};

/// One `cause -> effect value` or `a <-> b value` per line; `#` comments.
inline ReplayCoefficients parse_replay_coefficients(const std::string &text) {
    ReplayCoefficients out;
    int line_no = 0;
    for (const auto &raw : detail::lines_of(text)) {
        ++line_no;
        auto tokens = detail::split_ws(detail::space_arrows(detail::strip_comment(raw)));
        if (tokens.empty()) continue;
        auto where = "line " + std::to_string(line_no) + ": ";
        if (tokens.size() != 4 || (tokens[1] != "->" && tokens[1] != "<->"))
            throw Error(ErrorCode::SyntaxError, where + "expected '<cause> -> <effect> <value>'");
        auto value = detail::parse_real(tokens[3]);
        if (!value) throw Error(ErrorCode::SyntaxError, where + "non-numeric coefficient '" + tokens[3] + "'");
        if (tokens[1] == "->") {
            Edge e{tokens[0], tokens[2]};
            for (const auto &[have, v] : out.directed) {
                if (have == e) throw Error(ErrorCode::DuplicateEdge, where + e.cause + " -> " + e.effect);
            }
            out.directed.emplace_back(e, *value);
        } else {
            out.covary.emplace_back(Covary{tokens[0], tokens[2]}, *value);
        }
    }
    return out;
}

inline ReplayCoefficients load_replay_coefficients(const std::string &path) {
    return parse_replay_coefficients(detail::read_file(path));
}

inline PathWeights replay_weights(const CausalGraph &g, const ReplayCoefficients &coefficients) {
    validate_graph(g);
    PathWeights w{g, {}, {}};
    for (const auto &e : g.edges) {
        auto it = std::find_if(coefficients.directed.begin(), coefficients.directed.end(),
                               [&](const auto &kv) { return kv.first == e; });
        if (it == coefficients.directed.end())
            throw Error(ErrorCode::MissingCoefficient, "no value for " + e.cause + " -> " + e.effect);
        w.edge.push_back(it->second);
    }
    for (const auto &c : g.covary) {
        auto it = std::find_if(coefficients.covary.begin(), coefficients.covary.end(), [&](const auto &kv) {
            return (kv.first.first == c.first && kv.first.second == c.second) ||
                   (kv.first.first == c.second && kv.first.second == c.first);
        });
        if (it == coefficients.covary.end())
            throw Error(ErrorCode::MissingCoefficient, "no value for " + c.first + " <-> " + c.second);
        w.covary.push_back(it->second);
    }
    for (const auto &[e, v] : coefficients.directed) {
        if (!g.has_edge(e.cause, e.effect))
            throw Error(ErrorCode::InvalidArgument, e.cause + " -> " + e.effect + " is not a path of the model");
    }
    return w;
}

/// Reproduced correlations from supplied rather than estimated coefficients.
inline CorrelationMatrix replay_decomposition(const CausalGraph &g, const ReplayCoefficients &coefficients,
                                              std::size_t n = 0) {
    return reproduced_matrix(replay_weights(g, coefficients), n);
}

struct RemovedPath {
    Edge edge;
    double beta = 0.0;
    double p = 1.0;
};

struct TrimResult {
    std::vector<RemovedPath> removed;
    CausalGraph graph;
};

/// Drops every directed edge with p >= alpha at once. Arcs are never removed.
inline TrimResult trim_step(const FittedModel &m) {
    TrimResult out;
    std::vector<Edge> drop;
    for (const auto &e : m.graph.edges) {
        const auto est = m.path(e.cause, e.effect).value();
        if (!(est.p < m.alpha)) {
            out.removed.push_back({e, est.beta, est.p});
            drop.push_back(e);
        }
    }
    out.graph = without_edges(m.graph, drop);
    return out;
}

struct TrimIteration {
    std::vector<RemovedPath> removed; // edges dropped to reach this model; empty for the first
    FittedModel model;
    FitReport report;
};

struct TrimLog {
    std::vector<TrimIteration> iterations;

    const TrimIteration &final_iteration() const { return iterations.back(); }
    bool any_removed() const { return iterations.size() > 1; }
};

/// Fits, then alternately trims and refits until no path is removed.
inline TrimLog fit_and_trim(const CorrelationMatrix &c, const CausalGraph &g, double alpha = 0.05,
                            double threshold = default_fit_threshold) {
    TrimLog log;
    auto model = fit_model(c, g, alpha);
    auto report = fit_report(model, threshold);
    log.iterations.push_back({{}, std::move(model), std::move(report)});
    for (;;) {
        auto trimmed = trim_step(log.iterations.back().model);
        if (trimmed.removed.empty()) break;
        auto next = fit_model(c, trimmed.graph, alpha);
        auto next_report = fit_report(next, threshold);
        log.iterations.push_back({std::move(trimmed.removed), std::move(next), std::move(next_report)});
    }
    return log;
}

} // namespace pathan
