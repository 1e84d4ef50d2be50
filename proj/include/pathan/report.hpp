#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pathan/causal_model.hpp"
#include "pathan/dataset.hpp"
#include "pathan/detail/text.hpp"
#include "pathan/effects.hpp"
#include "pathan/estimator.hpp"
#include "pathan/fit_trim.hpp"
#include "pathan/screening.hpp"
#include "pathan/tracer.hpp"

namespace pathan {

using detail::fixed;

inline constexpr std::string_view version = "0.1.0";

struct Provenance {
    std::string command;
    std::string model_path;
    std::string data_path;
    std::string corr_path;
    std::string replay_path;
    double alpha = 0.05;
    double threshold = default_fit_threshold;
    bool trim = false;
    std::optional<std::uint64_t> seed;
};

/// Decomposition of the observed correlations under supplied coefficients.
struct ReplaySection {
    PathWeights weights;
    std::vector<Decomposition> decompositions;
    FitReport fit;
};

struct AnalysisReport {
    std::optional<ScreeningReport> screening;
    FittedModel model; // final model (after trimming when requested)
    std::vector<Decomposition> decompositions;
    FitReport fit;
    std::optional<TrimLog> trim_log;
    EffectsTable effects;
    std::optional<ReplaySection> replay;
    Provenance provenance;

    /// Fit verdict of the model under evaluation (the replayed one if present).
    bool consistent() const { return replay ? replay->fit.consistent : fit.consistent; }
};

struct AnalysisOptions {
    double alpha = 0.05;
    double threshold = default_fit_threshold;
    bool trim = false;
    std::optional<ReplayCoefficients> replay;
};

inline AnalysisReport analyze(const CorrelationMatrix &c, const CausalGraph &g, const AnalysisOptions &opt) {
    AnalysisReport rep;
    if (opt.trim) {
        auto log = fit_and_trim(c, g, opt.alpha, opt.threshold);
        rep.model = log.final_iteration().model;
        rep.fit = log.final_iteration().report;
        rep.trim_log = std::move(log);
    } else {
        rep.model = fit_model(c, g, opt.alpha);
        rep.fit = fit_report(rep.model, opt.threshold);
    }
    rep.decompositions = all_decompositions(rep.model.weights());
    rep.effects = effects_table(rep.model);
    if (opt.replay) {
        ReplaySection section;
        section.weights = replay_weights(g, *opt.replay);
        section.decompositions = all_decompositions(section.weights);
        section.fit = compare_correlations(c, reproduced_matrix(section.weights, c.n), opt.threshold);
        rep.replay = std::move(section);
    }
    rep.provenance.alpha = opt.alpha;
    rep.provenance.threshold = opt.threshold;
    rep.provenance.trim = opt.trim;
    return rep;
}

// ---------------------------------------------------------------- JSON

namespace detail {

using ojson = nlohmann::ordered_json;

inline ojson number(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

inline ojson optional_number(const std::optional<double> &v) { return v ? number(*v) : ojson(nullptr); }

inline ojson to_json(const CorrelationMatrix &c) {
    ojson rows = ojson::array();
    for (Eigen::Index i = 0; i < c.r.rows(); ++i) {
        ojson row = ojson::array();
        for (Eigen::Index j = 0; j < c.r.cols(); ++j) row.push_back(number(c.r(i, j)));
        rows.push_back(std::move(row));
    }
    return ojson{{"names", c.names}, {"n", c.n}, {"r", std::move(rows)}};
}

inline ojson to_json(const FitReport &f) {
    ojson flagged = ojson::array();
    for (const auto &c : f.flagged)
        flagged.push_back({{"row", c.row},
                           {"col", c.col},
                           {"observed", number(c.observed)},
                           {"reproduced", number(c.reproduced)},
                           {"diff", number(c.diff)}});
    return ojson{{"threshold", f.threshold},     {"consistent", f.consistent},      {"max_diff", number(f.max_diff())},
                 {"flagged", std::move(flagged)}, {"reproduced", to_json(f.reproduced)}};
}

inline ojson to_json(const std::vector<Decomposition> &decs) {
    ojson out = ojson::array();
    for (const auto &d : decs) {
        ojson traces = ojson::array();
        for (const auto &t : d.traces) {
            ojson steps = ojson::array();
            for (const auto &s : t.steps)
                steps.push_back({{"from", s.from},
                                 {"to", s.to},
                                 {"direction", std::string(to_string(s.direction))},
                                 {"weight", number(s.weight)}});
            traces.push_back({{"path", t.describe()},
                              {"class", std::string(to_string(t.kind))},
                              {"product", number(t.product)},
                              {"steps", std::move(steps)}});
        }
        out.push_back({{"pair", {d.first, d.second}}, {"reproduced", number(d.reproduced)}, {"traces", std::move(traces)}});
    }
    return out;
}

inline ojson to_json(const FittedModel &m) {
    ojson equations = ojson::array();
    for (const auto &f : m.fits) {
        ojson paths = ojson::array();
        for (const auto &p : f.paths)
            paths.push_back({{"cause", p.predictor},
                             {"effect", f.outcome},
                             {"beta", number(p.beta)},
                             {"se", number(p.se)},
                             {"t", number(p.t)},
                             {"p", number(p.p)},
                             {"significant", p.p < m.alpha}});
        equations.push_back({{"outcome", f.outcome},
                             {"r2", number(f.r2)},
                             {"residual_variance", number(f.residual_variance)},
                             {"n", f.n},
                             {"df", f.df},
                             {"paths", std::move(paths)}});
    }
    ojson covary = ojson::array();
    for (const auto &c : m.graph.covary)
        covary.push_back({{"first", c.first}, {"second", c.second}, {"value", number(m.correlation.at(c.first, c.second))}});
    return ojson{{"alpha", m.alpha}, {"equations", std::move(equations)}, {"covary", std::move(covary)}};
}

inline ojson to_json(const TrimLog &log) {
    ojson its = ojson::array();
    for (const auto &it : log.iterations) {
        ojson removed = ojson::array();
        for (const auto &r : it.removed)
            removed.push_back({{"cause", r.edge.cause}, {"effect", r.edge.effect}, {"beta", number(r.beta)}, {"p", number(r.p)}});
        ojson edges = ojson::array();
        for (const auto &e : it.model.graph.edges) edges.push_back(e.cause + " -> " + e.effect);
        its.push_back({{"removed", std::move(removed)},
                       {"edges", std::move(edges)},
                       {"consistent", it.report.consistent},
                       {"max_diff", number(it.report.max_diff())}});
    }
    return ojson{{"iterations", std::move(its)}};
}

inline ojson to_json(const EffectsTable &table) {
    ojson rows = ojson::array();
    for (const auto &r : table)
        rows.push_back({{"outcome", r.outcome},
                        {"determinant", r.determinant},
                        {"direct", optional_number(r.direct)},
                        {"indirect", optional_number(r.indirect)},
                        {"total", number(r.total)},
                        {"r2", number(r.r2)},
                        {"significant", r.determinant_significant}});
    return rows;
}

inline ojson to_json(const ScreeningReport &s) {
    ojson outliers = ojson::array();
    for (const auto &o : s.outliers) outliers.push_back({{"row", o.row}, {"d2", number(o.d2)}, {"flagged", o.flagged}});
    ojson normality = ojson::array();
    for (const auto &n : s.normality)
        normality.push_back({{"name", n.name}, {"d", number(n.d)}, {"critical", number(n.critical)}, {"pass", n.pass}});
    ojson vif = ojson::array();
    for (const auto &v : s.vif) vif.push_back({{"predictor", v.predictor}, {"vif", number(v.vif)}, {"flagged", v.flagged}});
    ojson hetero = nullptr;
    if (s.heteroscedasticity)
        hetero = {{"equation", s.heteroscedasticity_equation},
                  {"lm", number(s.heteroscedasticity->lm)},
                  {"p", number(s.heteroscedasticity->p)},
                  {"flagged", s.heteroscedasticity->flagged}};
    ojson ranges = ojson::array();
    for (const auto &r : s.ranges)
        ranges.push_back({{"name", r.name},
                          {"mean", number(r.mean)},
                          {"sd", number(r.sd)},
                          {"min", number(r.min)},
                          {"max", number(r.max)},
                          {"range", number(r.range)}});
    ojson linearity = ojson::array();
    for (const auto &l : s.linearity)
        linearity.push_back({{"pair", {l.first, l.second}},
                             {"pearson", number(l.pearson)},
                             {"spearman", number(l.spearman)},
                             {"gap", l.gap}});
    return ojson{{"outlier_cutoff", number(s.outlier_cutoff)},
                 {"outliers", std::move(outliers)},
                 {"normality", std::move(normality)},
                 {"vif_equation", s.vif_equation},
                 {"vif", std::move(vif)},
                 {"heteroscedasticity", std::move(hetero)},
                 {"ranges", std::move(ranges)},
                 {"linearity", std::move(linearity)},
                 {"all_pass", s.all_pass()}};
}

inline ojson to_json(const Provenance &p) {
    ojson inputs = ojson::object();
    inputs["model"] = p.model_path;
    if (!p.data_path.empty()) inputs["data"] = p.data_path;
    if (!p.corr_path.empty()) inputs["corr"] = p.corr_path;
    if (!p.replay_path.empty()) inputs["replay_coefficients"] = p.replay_path;
    return ojson{{"tool", "pathan"},
                 {"version", std::string(version)},
                 {"command", p.command},
                 {"inputs", std::move(inputs)},
                 {"alpha", p.alpha},
                 {"fit_threshold", p.threshold},
                 {"trim", p.trim},
                 {"seed", p.seed ? ojson(*p.seed) : ojson(nullptr)}};
}

} // namespace detail

inline nlohmann::ordered_json report_json(const AnalysisReport &r) {
    using detail::to_json;
    nlohmann::ordered_json doc;
    if (r.screening) doc["screening"] = to_json(*r.screening);
    doc["coefficients"] = to_json(r.model);
    doc["observed"] = to_json(r.fit.observed);
    doc["reproduced"] = to_json(r.fit.reproduced);
    doc["decompositions"] = to_json(r.decompositions);
    doc["fit"] = to_json(r.fit);
    if (r.trim_log) doc["trim_log"] = to_json(*r.trim_log);
    doc["effects"] = to_json(r.effects);
    if (r.replay) {
        nlohmann::ordered_json coeffs = nlohmann::ordered_json::array();
        const auto &g = r.replay->weights.graph;
        for (std::size_t i = 0; i < g.edges.size(); ++i)
            coeffs.push_back({{"cause", g.edges[i].cause}, {"effect", g.edges[i].effect}, {"value", r.replay->weights.edge[i]}});
        for (std::size_t i = 0; i < g.covary.size(); ++i)
            coeffs.push_back({{"first", g.covary[i].first}, {"second", g.covary[i].second}, {"value", r.replay->weights.covary[i]}});
        doc["replay"] = {{"coefficients", std::move(coeffs)},
                         {"decompositions", to_json(r.replay->decompositions)},
                         {"fit", to_json(r.replay->fit)}};
    }
    doc["provenance"] = to_json(r.provenance);
    return doc;
}

inline std::string render_json(const AnalysisReport &r) { return report_json(r).dump(2) + "\n"; }

inline std::string render_screening_json(const ScreeningReport &s, const Provenance &p) {
    nlohmann::ordered_json doc;
    doc["screening"] = detail::to_json(s);
    doc["provenance"] = detail::to_json(p);
    return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------- text

namespace detail {

inline std::string pad(std::string s, std::size_t width, bool left = false) {
    if (s.size() >= width) return s;
    return left ? s + std::string(width - s.size(), ' ') : std::string(width - s.size(), ' ') + s;
}

inline std::size_t name_width(const std::vector<std::string> &names, std::size_t floor = 4) {
    std::size_t w = floor;
    for (const auto &n : names) w = std::max(w, n.size());
    return w;
}

/// Lower-triangular matrix; cells for which mark(i, j) holds get a '*'.
template <typename Mark>
void write_triangle(std::ostream &os, const CorrelationMatrix &c, Mark mark) {
    const auto w = name_width(c.names);
    os << "  " << pad("", w, true);
    for (const auto &n : c.names) os << "  " << pad(n, 8);
    os << "\n";
    for (std::size_t i = 0; i < c.names.size(); ++i) {
        os << "  " << pad(c.names[i], w, true);
        for (std::size_t j = 0; j <= i; ++j) {
            auto cell = fixed(c.r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
            cell += mark(i, j) ? "*" : " ";
            os << "  " << pad(cell, 8);
        }
        os << "\n";
    }
}

inline void write_decompositions(std::ostream &os, const std::vector<Decomposition> &decs) {
    std::size_t w = 0;
    for (const auto &d : decs)
        for (const auto &t : d.traces) w = std::max(w, t.describe().size());
    for (const auto &d : decs) {
        os << "  r(" << d.first << ", " << d.second << ") = " << fixed(d.reproduced) << "\n";
        if (d.traces.empty()) os << "      (no connecting trace)\n";
        for (const auto &t : d.traces)
            os << "      " << pad(t.describe(), w, true) << "  (" << to_string(t.kind) << ")  "
               << pad(fixed(t.product), 7) << "\n";
    }
}

inline void write_screening(std::ostream &os, const ScreeningReport &s) {
    os << "Screening\n";
    std::vector<std::string> names;
    for (const auto &r : s.ranges) names.push_back(r.name);
    const auto w = name_width(names, 8);

    os << "  Ranges\n    " << pad("variable", w, true);
    for (auto h : {"mean", "sd", "min", "max", "range"}) os << "  " << pad(h, 10);
    os << "\n";
    for (const auto &r : s.ranges) {
        os << "    " << pad(r.name, w, true);
        for (double v : {r.mean, r.sd, r.min, r.max, r.range}) os << "  " << pad(fixed(v), 10);
        os << "\n";
    }

    const auto flagged = s.flagged_outliers();
    os << "  Outliers (Mahalanobis D^2 > " << fixed(s.outlier_cutoff) << "): ";
    if (flagged.empty()) {
        os << "none\n";
    } else {
        for (std::size_t i = 0; i < flagged.size(); ++i)
            os << (i ? ", " : "") << "row " << flagged[i].row << " (" << fixed(flagged[i].d2) << ")";
        os << "\n";
    }

    os << "  Normality (Lilliefors KS, alpha " << fixed(screening_alpha, 2) << ")\n";
    for (const auto &n : s.normality)
        os << "    " << pad(n.name, w, true) << "  D = " << fixed(n.d) << "  critical = " << fixed(n.critical) << "  "
           << (n.pass ? "pass" : "FAIL") << "\n";

    if (!s.vif.empty()) {
        os << "  VIF (equation for " << s.vif_equation << ")\n";
        for (const auto &v : s.vif)
            os << "    " << pad(v.predictor, w, true) << "  " << fixed(v.vif) << (v.flagged ? "  > 10" : "") << "\n";
    }
    if (s.heteroscedasticity) {
        const auto &h = *s.heteroscedasticity;
        os << "  Heteroscedasticity (equation for " << s.heteroscedasticity_equation << "): LM = " << fixed(h.lm)
           << ", p = " << fixed(h.p) << (h.flagged ? ", FLAGGED" : ", ok") << "\n";
    }
    os << "  Linearity (Pearson / Spearman)\n";
    for (const auto &l : s.linearity)
        os << "    " << l.first << " ~ " << l.second << "  " << fixed(l.pearson) << " / " << fixed(l.spearman)
           << (l.gap ? "  possible nonlinearity" : "") << "\n";
    os << "  Overall: " << (s.all_pass() ? "all checks pass" : "one or more checks flagged") << "\n\n";
}

inline void write_coefficients(std::ostream &os, const FittedModel &m) {
    std::vector<std::string> names = m.graph.variables;
    const auto w = name_width(names, 9);
    os << "Path coefficients\n";
    os << "  " << pad("predictor", w + 2, true);
    for (auto h : {"beta", "se", "t", "p"}) os << "  " << pad(h, 8);
    os << "\n";
    for (const auto &f : m.fits) {
        os << "  " << f.outcome << "  (R^2 = " << fixed(f.r2) << ", n = " << f.n << ", df = " << f.df << ")\n";
        for (const auto &p : f.paths) {
            os << "    " << pad(p.predictor, w, true) << "  " << pad(fixed(p.beta) + (p.p < m.alpha ? "*" : " "), 8)
               << "  " << pad(fixed(p.se), 8) << "  " << pad(fixed(p.t), 8) << "  " << pad(fixed(p.p), 8) << "\n";
        }
    }
    if (m.fits.empty()) os << "  (no structural equations)\n";
    os << "  * p < " << fixed(m.alpha) << "\n\n";
}

inline void write_fit(std::ostream &os, const FitReport &f, const std::string &title) {
    os << title << "\n";
    os << " Observed correlation\n";
    write_triangle(os, f.observed, [](std::size_t, std::size_t) { return false; });
    os << " Reproduced correlation\n";
    write_triangle(os, f.reproduced, [&](std::size_t i, std::size_t j) {
        return i != j && f.is_flagged(f.reproduced.names[i], f.reproduced.names[j]);
    });
    os << "  * |observed - reproduced| > " << fixed(f.threshold) << "\n";
    os << "  max |observed - reproduced| = " << fixed(f.max_diff()) << "; "
       << (f.consistent ? "consistent with the observed correlations" : "NOT consistent with the observed correlations")
       << "\n\n";
}

inline void write_effects(std::ostream &os, const EffectsTable &table) {
    std::vector<std::string> dets;
    for (const auto &r : table) dets.push_back(r.determinant + "*");
    const auto w = name_width(dets, 11);
    os << "Causal effects\n";
    os << "  " << pad("determinant", w + 2, true);
    for (auto h : {"direct", "indirect", "total"}) os << "  " << pad(h, 8);
    os << "\n";
    std::string current;
    for (const auto &r : table) {
        if (r.outcome != current) {
            os << "  " << r.outcome << "  (R^2 = " << fixed(r.r2) << ")\n";
            current = r.outcome;
        }
        auto cell = [](const std::optional<double> &v) { return v ? fixed(*v) : std::string("---"); };
        os << "    " << pad(r.determinant + (r.determinant_significant ? "*" : ""), w, true) << "  "
           << pad(cell(r.direct), 8) << "  " << pad(cell(r.indirect), 8) << "  " << pad(fixed(r.total), 8) << "\n";
    }
    if (table.empty()) os << "  (no causal effects)\n";
    os << "  * direct path significant\n\n";
}

} // namespace detail

/// Human-readable tables at three decimals.
inline std::string render_text(const AnalysisReport &r) {
    std::ostringstream os;
    const auto &p = r.provenance;
    os << "pathan " << version << " path analysis\n";
    os << "  model: " << p.model_path;
    if (!p.corr_path.empty()) os << "  correlations: " << p.corr_path;
    if (!p.data_path.empty()) os << "  data: " << p.data_path;
    os << "  (n = " << r.model.correlation.n << ")\n";
    os << "  alpha = " << fixed(p.alpha) << "  fit threshold = " << fixed(p.threshold) << "\n\n";

    if (r.screening) detail::write_screening(os, *r.screening);

    if (r.trim_log && r.trim_log->any_removed()) {
        os << "Trimming\n";
        for (std::size_t i = 1; i < r.trim_log->iterations.size(); ++i) {
            const auto &it = r.trim_log->iterations[i];
            os << "  step " << i << ": removed";
            for (std::size_t k = 0; k < it.removed.size(); ++k) {
                const auto &rm = it.removed[k];
                os << (k ? "," : "") << " " << rm.edge.cause << " -> " << rm.edge.effect << " (beta " << fixed(rm.beta)
                   << ", p " << fixed(rm.p) << ")";
            }
            os << "; max diff " << fixed(it.report.max_diff()) << (it.report.consistent ? ", consistent" : ", inconsistent")
               << "\n";
        }
        os << "\n";
    }

    detail::write_coefficients(os, r.model);
    os << "Path decompositions\n";
    detail::write_decompositions(os, r.decompositions);
    os << "\n";
    detail::write_fit(os, r.fit, "Model fit");
    detail::write_effects(os, r.effects);

    if (r.replay) {
        os << "Replay with supplied coefficients\n";
        const auto &w = r.replay->weights;
        for (std::size_t i = 0; i < w.graph.edges.size(); ++i)
            os << "  " << w.graph.edges[i].cause << " -> " << w.graph.edges[i].effect << "  " << fixed(w.edge[i], 5) << "\n";
        for (std::size_t i = 0; i < w.graph.covary.size(); ++i)
            os << "  " << w.graph.covary[i].first << " <-> " << w.graph.covary[i].second << "  " << fixed(w.covary[i], 5) << "\n";
        detail::write_decompositions(os, r.replay->decompositions);
        os << "\n";
        detail::write_fit(os, r.replay->fit, "Replay fit");
    }

    os << "Verdict: " << (r.consistent() ? "consistent" : "inconsistent") << "\n";
    return os.str();
}

inline std::string render_screening_text(const ScreeningReport &s, const Provenance &p) {
    std::ostringstream os;
    os << "pathan " << version << " screening\n  model: " << p.model_path << "  data: " << p.data_path << "\n\n";
    detail::write_screening(os, s);
    return os.str();
}

// ---------------------------------------------------------------- DOT

namespace detail {

inline std::string dot_id(const std::string &name) {
    std::string out = "\"";
    for (char c : name) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out + "\"";
}

} // namespace detail

/// Graphviz digraph of the model. With a fitted model, edges carry their
/// coefficient (three decimals, '*' when significant) and arcs their
/// correlation.
inline std::string render_diagram(const CausalGraph &g, const FittedModel *m = nullptr) {
    using detail::dot_id;
    std::ostringstream os;
    os << "digraph path_model {\n";
    os << "  rankdir=LR;\n";
    os << "  node [shape=box];\n";
    for (const auto &v : g.variables) os << "  " << dot_id(v) << ";\n";
    for (const auto &e : g.edges) {
        os << "  " << dot_id(e.cause) << " -> " << dot_id(e.effect);
        if (m) {
            if (auto est = m->path(e.cause, e.effect))
                os << " [label=\"" << detail::fixed(est->beta) << (est->p < m->alpha ? "*" : "") << "\"]";
        }
        os << ";\n";
    }
    for (const auto &c : g.covary) {
        os << "  " << dot_id(c.first) << " -> " << dot_id(c.second) << " [dir=none, style=dashed";
        if (m) os << ", label=\"" << detail::fixed(m->correlation.at(c.first, c.second)) << "\"";
        os << "];\n";
    }
    os << "}\n";
    return os.str();
}

} // namespace pathan
