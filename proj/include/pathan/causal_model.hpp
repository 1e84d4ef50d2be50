#pragma once

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "pathan/detail/text.hpp"
#include "pathan/error.hpp"

namespace pathan {

struct Edge {
    std::string cause;
    std::string effect;

    friend bool operator==(const Edge &, const Edge &) = default;
    friend auto operator<=>(const Edge &, const Edge &) = default;
};

/// Two-headed arc between exogenous variables; stored with first/second in
/// declaration order.
struct Covary {
    std::string first;
    std::string second;

    friend bool operator==(const Covary &, const Covary &) = default;
    friend auto operator<=>(const Covary &, const Covary &) = default;
};

/// Recursive path model: declared variables, directed cause -> effect edges,
/// and optional covariance arcs among exogenous variables.
struct CausalGraph {
    std::vector<std::string> variables;
    std::vector<Edge> edges;
    std::vector<Covary> covary;

    std::ptrdiff_t index_of(const std::string &name) const {
        auto it = std::find(variables.begin(), variables.end(), name);
        return it == variables.end() ? -1 : std::distance(variables.begin(), it);
    }

    bool has_variable(const std::string &name) const { return index_of(name) >= 0; }

    bool has_edge(const std::string &cause, const std::string &effect) const {
        return std::find(edges.begin(), edges.end(), Edge{cause, effect}) != edges.end();
    }

    /// Parents of v in declaration order.
    std::vector<std::string> parents(const std::string &v) const {
        std::vector<std::string> out;
        for (const auto &name : variables) {
            if (has_edge(name, v)) out.push_back(name);
        }
        return out;
    }

    std::vector<std::string> children(const std::string &v) const {
        std::vector<std::string> out;
        for (const auto &name : variables) {
            if (has_edge(v, name)) out.push_back(name);
        }
        return out;
    }

    bool is_exogenous(const std::string &v) const {
        return std::none_of(edges.begin(), edges.end(), [&](const Edge &e) { return e.effect == v; });
    }

    /// Directed ancestors of v in declaration order.
    std::vector<std::string> ancestors(const std::string &v) const {
        std::vector<bool> mark(variables.size(), false);
        std::vector<std::string> stack{v};
        while (!stack.empty()) {
            auto cur = stack.back();
            stack.pop_back();
            for (const auto &p : parents(cur)) {
                auto idx = static_cast<std::size_t>(index_of(p));
                if (!mark[idx]) {
                    mark[idx] = true;
                    stack.push_back(p);
                }
            }
        }
        std::vector<std::string> out;
        for (std::size_t i = 0; i < variables.size(); ++i) {
            if (mark[i]) out.push_back(variables[i]);
        }
        return out;
    }

    bool is_ancestor(const std::string &candidate, const std::string &v) const {
        auto a = ancestors(v);
        return std::find(a.begin(), a.end(), candidate) != a.end();
    }

    /// Same variables in the same order with the same edge and arc sets.
    friend bool operator==(const CausalGraph &a, const CausalGraph &b) {
        auto sorted = [](auto v) {
            std::sort(v.begin(), v.end());
            return v;
        };
        return a.variables == b.variables && sorted(a.edges) == sorted(b.edges) &&
               sorted(a.covary) == sorted(b.covary);
    }
};

/// Outcome regressed on its graph parents.
struct StructuralEquation {
    std::string outcome;
    std::vector<std::string> predictors;

    friend bool operator==(const StructuralEquation &, const StructuralEquation &) = default;
};

/// All variables in a topological order that breaks ties by declaration order.
/// Throws CycleDetected if the directed edges are not acyclic.
inline std::vector<std::string> topological_order(const CausalGraph &g) {
    const auto p = g.variables.size();
    std::vector<int> indegree(p, 0);
    for (const auto &e : g.edges) ++indegree[static_cast<std::size_t>(g.index_of(e.effect))];
    std::vector<bool> done(p, false);
    std::vector<std::string> order;
    while (order.size() < p) {
        std::size_t next = p;
        for (std::size_t i = 0; i < p; ++i) {
            if (!done[i] && indegree[i] == 0) {
                next = i;
                break;
            }
        }
        if (next == p) {
            std::string members;
            for (std::size_t i = 0; i < p; ++i) {
                if (!done[i]) members += (members.empty() ? "" : " ") + g.variables[i];
            }
            throw Error(ErrorCode::CycleDetected, "cycle among {" + members + "}");
        }
        done[next] = true;
        order.push_back(g.variables[next]);
        for (const auto &e : g.edges) {
            if (e.cause == g.variables[next]) --indegree[static_cast<std::size_t>(g.index_of(e.effect))];
        }
    }
    return order;
}

/// Checks every structural invariant and returns the endogenous variables in
/// topological order. Variables touching no edge or arc are reported through
/// warnings when a sink is given.
inline std::vector<std::string> validate_graph(const CausalGraph &g, std::vector<std::string> *warnings = nullptr) {
    for (std::size_t i = 0; i < g.variables.size(); ++i) {
        const auto &v = g.variables[i];
        if (!detail::valid_name(v)) throw Error(ErrorCode::InvalidName, "invalid variable name '" + v + "'");
        for (std::size_t j = 0; j < i; ++j) {
            if (g.variables[j] == v) throw Error(ErrorCode::DuplicateName, "variable '" + v + "' declared twice");
        }
    }
    auto require = [&](const std::string &v) {
        if (!g.has_variable(v)) throw Error(ErrorCode::UnknownVariable, "'" + v + "' is not declared");
    };
    for (std::size_t i = 0; i < g.edges.size(); ++i) {
        const auto &e = g.edges[i];
        require(e.cause);
        require(e.effect);
        if (e.cause == e.effect) throw Error(ErrorCode::SelfLoop, e.cause + " -> " + e.effect);
        for (std::size_t j = 0; j < i; ++j) {
            if (g.edges[j] == e) throw Error(ErrorCode::DuplicateEdge, e.cause + " -> " + e.effect);
        }
    }
    auto order = topological_order(g);
    for (std::size_t i = 0; i < g.covary.size(); ++i) {
        const auto &c = g.covary[i];
        require(c.first);
        require(c.second);
        if (c.first == c.second) throw Error(ErrorCode::SelfLoop, c.first + " <-> " + c.second);
        for (const auto &v : {c.first, c.second}) {
            if (!g.is_exogenous(v))
                throw Error(ErrorCode::CovaryOnEndogenous, c.first + " <-> " + c.second + " (" + v + " has a cause)");
        }
        for (std::size_t j = 0; j < i; ++j) {
            const auto &o = g.covary[j];
            if ((o.first == c.first && o.second == c.second) || (o.first == c.second && o.second == c.first))
                throw Error(ErrorCode::DuplicateEdge, c.first + " <-> " + c.second);
        }
    }
    if (warnings) {
        for (const auto &v : g.variables) {
            bool touched = std::any_of(g.edges.begin(), g.edges.end(),
                                       [&](const Edge &e) { return e.cause == v || e.effect == v; }) ||
                           std::any_of(g.covary.begin(), g.covary.end(),
                                       [&](const Covary &c) { return c.first == v || c.second == v; });
            if (!touched) warnings->push_back("variable '" + v + "' is isolated");
        }
    }
    std::vector<std::string> endogenous;
    for (const auto &v : order) {
        if (!g.is_exogenous(v)) endogenous.push_back(v);
    }
    return endogenous;
}

inline std::vector<StructuralEquation> equations_for(const CausalGraph &g) {
    std::vector<StructuralEquation> out;
    for (const auto &v : validate_graph(g)) out.push_back({v, g.parents(v)});
    return out;
}

/// Parses the line-based model format (`var`, `path A -> B`, `covary A <-> B`,
/// `#` comments) and validates the result.
inline CausalGraph parse_model_text(const std::string &text) {
    CausalGraph g;
    int line_no = 0;
    for (const auto &raw : detail::lines_of(text)) {
        ++line_no;
        auto tokens = detail::split_ws(detail::space_arrows(detail::strip_comment(raw)));
        if (tokens.empty()) continue;
        auto fail = [&](const std::string &msg) {
            throw Error(ErrorCode::SyntaxError, "line " + std::to_string(line_no) + ": " + msg);
        };
        auto declared = [&](const std::string &v) {
            if (!g.has_variable(v))
                throw Error(ErrorCode::UnknownVariable,
                            "line " + std::to_string(line_no) + ": '" + v + "' is not declared");
        };
        if (tokens[0] == "var") {
            if (tokens.size() < 2) fail("'var' needs at least one name");
            for (std::size_t i = 1; i < tokens.size(); ++i) {
                if (!detail::valid_name(tokens[i])) fail("invalid variable name '" + tokens[i] + "'");
                if (g.has_variable(tokens[i]))
                    throw Error(ErrorCode::DuplicateName,
                                "line " + std::to_string(line_no) + ": '" + tokens[i] + "' declared twice");
                g.variables.push_back(tokens[i]);
            }
        } else if (tokens[0] == "path") {
            if (tokens.size() != 4 || tokens[2] != "->") fail("expected 'path <cause> -> <effect>'");
            declared(tokens[1]);
            declared(tokens[3]);
            g.edges.push_back({tokens[1], tokens[3]});
        } else if (tokens[0] == "covary") {
            if (tokens.size() != 4 || tokens[2] != "<->") fail("expected 'covary <a> <-> <b>'");
            declared(tokens[1]);
            declared(tokens[3]);
            auto a = tokens[1], b = tokens[3];
            if (g.index_of(b) < g.index_of(a)) std::swap(a, b);
            g.covary.push_back({a, b});
        } else {
            fail("unknown directive '" + tokens[0] + "'");
        }
    }
    validate_graph(g);
    return g;
}

inline CausalGraph parse_model(const std::string &path) { return parse_model_text(detail::read_file(path)); }

inline std::string serialize_model(const CausalGraph &g) {
    std::string out = "var";
    for (const auto &v : g.variables) out += " " + v;
    out += "\n";
    for (const auto &e : g.edges) out += "path " + e.cause + " -> " + e.effect + "\n";
    for (const auto &c : g.covary) out += "covary " + c.first + " <-> " + c.second + "\n";
    return out;
}

/// A graph with a number attached to every directed edge and every arc,
/// index-aligned with graph.edges and graph.covary.
struct PathWeights {
    CausalGraph graph;
    std::vector<double> edge;
    std::vector<double> covary;

    double edge_weight(const std::string &cause, const std::string &effect) const {
        for (std::size_t i = 0; i < graph.edges.size(); ++i) {
            if (graph.edges[i].cause == cause && graph.edges[i].effect == effect) return edge.at(i);
        }
        throw Error(ErrorCode::MissingCoefficient, cause + " -> " + effect);
    }

    double covary_weight(const std::string &a, const std::string &b) const {
        for (std::size_t i = 0; i < graph.covary.size(); ++i) {
            const auto &c = graph.covary[i];
            if ((c.first == a && c.second == b) || (c.first == b && c.second == a)) return covary.at(i);
        }
        throw Error(ErrorCode::MissingCoefficient, a + " <-> " + b);
    }
};

/// g without the listed directed edges; arcs are kept.
inline CausalGraph without_edges(const CausalGraph &g, const std::vector<Edge> &removed) {
    CausalGraph out = g;
    std::erase_if(out.edges, [&](const Edge &e) {
        return std::find(removed.begin(), removed.end(), e) != removed.end();
    });
    return out;
}

} // namespace pathan
