#pragma once

#include <algorithm>
#include <cstdint>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pathan/causal_model.hpp"
#include "pathan/dataset.hpp"
#include "pathan/fit_trim.hpp"
#include "pathan/report.hpp"
#include "pathan/screening.hpp"

namespace pathan {

enum ExitStatus : int {
    exit_consistent = 0,
    exit_inconsistent = 1,
    exit_usage = 2,
    exit_failure = 3,
};

namespace detail {

struct CliOptions {
    std::string model;
    std::string data;
    std::string corr;
    std::string replay;
    std::string missing;
    std::string format = "text";
    double alpha = 0.05;
    double threshold = default_fit_threshold;
    std::optional<std::uint64_t> seed;
    bool trim = false;
    bool exact = false;
    std::size_t sample_size = 0;
};

struct UsageError {
    std::string message;
};

inline std::set<std::string> missing_tokens(const CliOptions &o) {
    if (o.missing.empty()) return default_missing_tokens();
    std::set<std::string> out;
    for (const auto &tok : split(o.missing, ',')) out.insert(std::string(trim(tok)));
    return out;
}

inline void flush_warnings(std::vector<std::string> &warnings, std::ostream &err) {
    for (const auto &w : warnings) err << "warning: " << w << "\n";
    warnings.clear();
}

inline Provenance provenance_of(const std::string &command, const CliOptions &o) {
    Provenance p;
    p.command = command;
    p.model_path = o.model;
    p.data_path = o.data;
    p.corr_path = o.corr;
    p.replay_path = o.replay;
    p.alpha = o.alpha;
    p.threshold = o.threshold;
    p.trim = o.trim;
    p.seed = o.seed;
    return p;
}

inline CausalGraph load_graph(const CliOptions &o, std::ostream &err) {
    auto g = parse_model(o.model);
    std::vector<std::string> warnings;
    validate_graph(g, &warnings);
    flush_warnings(warnings, err);
    return g;
}

/// Correlations for the model's variables from whichever input was given.
inline CorrelationMatrix load_observed(const CliOptions &o, const CausalGraph &g, std::optional<Dataset> &raw,
                                       std::ostream &err) {
    if (!o.data.empty()) {
        raw = load_dataset(o.data, missing_tokens(o));
        if (raw->dropped_rows)
            err << "warning: " << raw->dropped_rows << " incomplete row(s) dropped from " << o.data << "\n";
        for (const auto &v : g.variables) {
            if (raw->index_of(v) < 0) throw Error(ErrorCode::UnknownVariable, "'" + v + "' is not a column of " + o.data);
        }
        return pearson_matrix(select(*raw, g.variables));
    }
    std::vector<std::string> warnings;
    auto c = load_correlation(o.corr, &warnings);
    flush_warnings(warnings, err);
    return c;
}

inline int run_fit(const std::string &command, const CliOptions &o, std::ostream &out, std::ostream &err) {
    if (o.data.empty() == o.corr.empty()) throw UsageError{"exactly one of --data or --corr is required"};
    if (o.trim && !o.replay.empty()) throw UsageError{"--replay-coefficients cannot be combined with trimming"};
    const auto g = load_graph(o, err);
    std::optional<Dataset> raw;
    const auto c = load_observed(o, g, raw, err);

    AnalysisOptions opt;
    opt.alpha = o.alpha;
    opt.threshold = o.threshold;
    opt.trim = o.trim;
    if (!o.replay.empty()) opt.replay = load_replay_coefficients(o.replay);
    auto rep = analyze(c, g, opt);
    if (raw) {
        try {
            rep.screening = screen_report(*raw, g);
        } catch (const Error &e) {
            err << "warning: screening skipped: " << e.what() << "\n";
        }
    }
    rep.provenance = provenance_of(command, o);

    if (o.format == "json")
        out << render_json(rep);
    else if (o.format == "dot")
        out << render_diagram(rep.model.graph, &rep.model);
    else
        out << render_text(rep);
    return rep.consistent() ? exit_consistent : exit_inconsistent;
}

inline int run_screen(const CliOptions &o, std::ostream &out, std::ostream &err) {
    if (o.format == "dot") throw UsageError{"screen supports --format text or json"};
    const auto g = load_graph(o, err);
    auto d = load_dataset(o.data, missing_tokens(o));
    if (d.dropped_rows) err << "warning: " << d.dropped_rows << " incomplete row(s) dropped from " << o.data << "\n";
    const auto s = screen_report(d, g);
    const auto prov = provenance_of("screen", o);
    out << (o.format == "json" ? render_screening_json(s, prov) : render_screening_text(s, prov));
    return exit_consistent;
}

inline int run_diagram(const CliOptions &o, std::ostream &out, std::ostream &err) {
    if (!o.data.empty() && !o.corr.empty()) throw UsageError{"give at most one of --data or --corr"};
    const auto g = load_graph(o, err);
    if (o.data.empty() && o.corr.empty()) {
        out << render_diagram(g);
        return exit_consistent;
    }
    std::optional<Dataset> raw;
    const auto m = fit_model(load_observed(o, g, raw, err), g, o.alpha);
    out << render_diagram(g, &m);
    return exit_consistent;
}

inline int run_simulate(const CliOptions &o, std::ostream &out, std::ostream &err) {
    std::vector<std::string> warnings;
    const auto c = load_correlation(o.corr, &warnings);
    flush_warnings(warnings, err);
    const auto n = o.sample_size ? o.sample_size : c.n;
    out << format_dataset(generate_synthetic(c, n, o.seed.value_or(1), o.exact));
    return exit_consistent;
}

} // namespace detail

/// Entry point behind the pathan executable. args excludes the program name.
/// Exit status: 0 consistent model, 1 inconsistent model, 2 usage error,
/// 3 data or model error.
inline int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    using detail::CliOptions;
    CliOptions o;
    CLI::App app{"Recursive path analysis: estimate, decompose, trim and report path models", "pathan"};
    app.set_version_flag("--version", std::string(version));
    app.require_subcommand(1);

    auto add_model = [&](CLI::App *sub) { sub->add_option("--model", o.model, "model file")->required(); };
    auto add_inputs = [&](CLI::App *sub) {
        sub->add_option("--data", o.data, "CSV of raw observations");
        sub->add_option("--corr", o.corr, "correlation matrix file");
        sub->add_option("--missing", o.missing, "comma-separated missing-value tokens (default: empty, NA)");
    };
    auto add_analysis = [&](CLI::App *sub) {
        sub->add_option("--alpha", o.alpha, "significance level for paths")->check(CLI::Range(1e-12, 1.0));
        sub->add_option("--fit-threshold", o.threshold, "largest tolerated |observed - reproduced|")
            ->check(CLI::PositiveNumber);
        sub->add_option("--seed", o.seed, "seed recorded in the report provenance");
    };

    auto *fit = app.add_subcommand("fit", "fit the model and report decompositions, fit and effects");
    add_model(fit);
    add_inputs(fit);
    add_analysis(fit);
    fit->add_flag("--trim", o.trim, "remove non-significant paths and refit until stable");
    fit->add_option("--replay-coefficients", o.replay, "decompose with supplied path values");
    fit->add_option("--format", o.format, "text, json or dot")->check(CLI::IsMember({"text", "json", "dot"}));

    auto *trim = app.add_subcommand("trim", "alias for fit --trim");
    add_model(trim);
    add_inputs(trim);
    add_analysis(trim);
    trim->add_option("--format", o.format, "text, json or dot")->check(CLI::IsMember({"text", "json", "dot"}));

    auto *screen = app.add_subcommand("screen", "pre-analysis data checks");
    add_model(screen);
    screen->add_option("--data", o.data, "CSV of raw observations")->required();
    screen->add_option("--missing", o.missing, "comma-separated missing-value tokens (default: empty, NA)");
    screen->add_option("--format", o.format, "text or json")->check(CLI::IsMember({"text", "json", "dot"}));
    screen->add_option("--seed", o.seed, "seed recorded in the report provenance");

    auto *diagram = app.add_subcommand("diagram", "Graphviz rendering of the model");
    add_model(diagram);
    add_inputs(diagram);
    diagram->add_option("--alpha", o.alpha, "significance level for edge stars")->check(CLI::Range(1e-12, 1.0));
    diagram->add_option("--format", o.format, "dot")->check(CLI::IsMember({"dot"}));

    auto *simulate = app.add_subcommand("simulate", "draw synthetic data with a target correlation matrix");
    simulate->add_option("--corr", o.corr, "target correlation matrix")->required();
    simulate->add_option("--n", o.sample_size, "number of rows (default: n of the matrix)");
    simulate->add_option("--seed", o.seed, "random seed (default 1)");
    simulate->add_flag("--exact", o.exact, "make the sample correlation equal the target");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_consistent : exit_usage;
    }

    try {
        if (fit->parsed()) return detail::run_fit("fit", o, out, err);
        if (trim->parsed()) {
            o.trim = true;
            return detail::run_fit("trim", o, out, err);
        }
        if (screen->parsed()) return detail::run_screen(o, out, err);
        if (diagram->parsed()) return detail::run_diagram(o, out, err);
        if (simulate->parsed()) return detail::run_simulate(o, out, err);
    } catch (const detail::UsageError &e) {
        err << "usage error: " << e.message << "\n" << "run 'pathan <command> --help' for the option list\n";
        return exit_usage;
    } catch (const Error &e) {
        err << "error: " << e.what() << "\n";
        return exit_failure;
    } catch (const std::exception &e) {
        err << "error: Internal: " << e.what() << "\n";
        return exit_failure;
    }
    return exit_usage;
}

} // namespace pathan
