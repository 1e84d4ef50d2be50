// Acceptance suite: one PASS/FAIL line per criterion, failing sub-checks
// listed underneath. Exit status is the number of failed criteria.

#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pathan/cli.hpp"
#include "pathan/pathan.hpp"
#include "support/fixtures.hpp"

using namespace pathan;

namespace {

class Criterion {
public:
    explicit Criterion(std::string title) : title_(std::move(title)) {}

    void check(bool ok, const std::string &what) {
        if (!ok) failures_.push_back(what);
    }

    void near(double got, double want, double tol, const std::string &what) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s: got %.6f, expected %.6f +/- %g", what.c_str(), got, want, tol);
        check(std::fabs(got - want) <= tol, buf);
    }

    void note(const std::string &line) { notes_.push_back(line); }

    bool report(int number) const {
        const bool pass = failures_.empty();
        std::printf("[%s] %d. %s\n", pass ? "PASS" : "FAIL", number, title_.c_str());
        for (const auto &f : failures_) std::printf("       - %s\n", f.c_str());
        for (const auto &n : notes_) std::printf("       . %s\n", n.c_str());
        return pass;
    }

private:
    std::string title_;
    std::vector<std::string> failures_;
    std::vector<std::string> notes_;
};

std::string fmt(const char *f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

Criterion correlation_pvalues() {
    Criterion c("correlation p-values at n = 44");
    const auto t = fixtures::sample_corr();
    c.near(correlation_pvalue(t.at("X1", "Y"), 44), 0.143, 0.002, "p(0.225)");
    c.near(correlation_pvalue(t.at("X2", "Y"), 44), 0.070, 0.002, "p(0.276)");
    const double p469 = correlation_pvalue(t.at("X1", "X3"), 44);
    c.check(p469 <= 0.002, "p(-0.469) <= 0.002, got " + fmt("%.6f", p469));
    const double p804 = correlation_pvalue(t.at("X1", "X2"), 44);
    c.check(p804 < 0.0005, "p(0.804) < 0.0005, got " + fmt("%.3g", p804));
    return c;
}

Criterion initial_estimation() {
    Criterion c("initial-model estimation");
    const auto m = fit_model(fixtures::sample_corr(), fixtures::initial_model());
    const auto &y = m.equation("Y");
    c.near(y.find("X1")->beta, 0.045, 0.003, "beta X1 -> Y");
    c.near(y.find("X2")->beta, -0.080, 0.003, "beta X2 -> Y");
    c.near(y.find("X3")->beta, -0.521, 0.003, "beta X3 -> Y");
    const auto &x3 = m.equation("X3");
    c.near(x3.find("X1")->beta, 0.067, 0.005, "beta X1 -> X3");
    c.near(x3.find("X2")->beta, -0.667, 0.005, "beta X2 -> X3");
    c.near(m.equation("X2").find("X1")->beta, 0.804, 0.001, "beta X1 -> X2");
    c.near(y.r2, 0.245, 0.003, "R^2 Y");
    c.near(x3.r2, 0.378, 0.003, "R^2 X3");
    c.near(m.equation("X2").r2, 0.647, 0.003, "R^2 X2");
    return c;
}

Criterion trimming() {
    Criterion c("trimming at alpha = 0.05");
    const auto log = fit_and_trim(fixtures::sample_corr(), fixtures::initial_model(), 0.05);
    std::vector<Edge> removed;
    for (const auto &it : log.iterations)
        for (const auto &r : it.removed) removed.push_back(r.edge);
    std::sort(removed.begin(), removed.end());
    std::vector<Edge> expected{{"X1", "Y"}, {"X2", "Y"}, {"X1", "X3"}};
    std::sort(expected.begin(), expected.end());
    c.check(removed == expected, "removed set is {X1->Y, X2->Y, X1->X3}");
    const auto &m = log.final_iteration().model;
    c.check(m.graph == fixtures::revised_model(), "final graph is the chain X1 -> X2 -> X3 -> Y");
    if (m.graph == fixtures::revised_model()) {
        c.near(m.path("X1", "X2")->beta, 0.804, 1e-12, "beta X1 -> X2");
        c.near(m.path("X2", "X3")->beta, -0.613, 1e-12, "beta X2 -> X3");
        c.near(m.path("X3", "Y")->beta, -0.493, 1e-12, "beta X3 -> Y");
    }
    return c;
}

Criterion revised_reproduced() {
    Criterion c("revised-model reproduced correlations and fit");
    const auto m = fit_model(fixtures::sample_corr(), fixtures::revised_model());
    const auto f = fit_report(m);
    c.near(f.reproduced.at("X1", "X3"), -0.493, 0.001, "r13");
    c.near(f.reproduced.at("X1", "Y"), 0.243, 0.001, "r1y");
    c.near(f.reproduced.at("X2", "Y"), 0.302, 0.001, "r2y");
    c.check(f.flagged.empty(), "no flagged cells");
    c.check(f.max_diff() < 0.05, "max diff < 0.05");
    c.note("max |observed - reproduced| = " + fmt("%.4f", f.max_diff()));
    return c;
}

Criterion replay() {
    Criterion c("replay of the reference initial coefficients");
    const auto coef = load_replay_coefficients(fixtures::data_path("reference_initial.coef"));
    const auto w = replay_weights(fixtures::initial_model(), coef);
    const auto r = reproduced_matrix(w, 44);
    c.near(r.at("X1", "X3"), 0.17132, 0.001, "r13");
    c.near(r.at("X2", "X3"), -0.099, 0.001, "r23");
    c.near(r.at("X1", "Y"), -0.109, 0.001, "r1y");
    c.near(r.at("X2", "Y"), 0.008, 0.001, "r2y");
    c.near(r.at("X3", "Y"), -0.481, 0.001, "r3y");
    const auto f = compare_correlations(fixtures::sample_corr(), r);
    c.check(f.is_flagged("X3", "X2"), "cell (X3, X2) flagged");
    c.check(f.is_flagged("Y", "X1"), "cell (Y, X1) flagged");
    c.check(f.is_flagged("Y", "X2"), "cell (Y, X2) flagged");
    if (std::fabs(r.at("X3", "Y") + 0.481) > 0.001) {
        for (const auto &t : enumerate_traces(w, "X3", "Y"))
            c.note(t.describe() + "  (" + std::string(to_string(t.kind)) + ")  " + fmt("%+.5f", t.product));
        const double omitted = w.edge_weight("X2", "X3") * w.edge_weight("X1", "X2") * w.edge_weight("X1", "Y");
        c.note("sum without X3 <- X2 <- X1 -> Y = " + fmt("%.5f", r.at("X3", "Y") - omitted));
    }
    return c;
}

Criterion effects() {
    Criterion c("causal effects table");
    const auto m = fit_model(fixtures::sample_corr(), fixtures::revised_model());
    const auto t = effects_table(m);
    struct Cell {
        const char *outcome, *det;
        std::optional<double> direct, indirect;
        double total;
    };
    const Cell expected[] = {
        {"X2", "X1", 0.804, std::nullopt, 0.804},   {"X3", "X1", std::nullopt, -0.493, -0.493},
        {"X3", "X2", -0.613, std::nullopt, -0.613}, {"Y", "X1", std::nullopt, 0.243, 0.243},
        {"Y", "X2", std::nullopt, 0.302, 0.302},    {"Y", "X3", -0.493, std::nullopt, -0.493},
    };
    c.check(t.size() == std::size(expected), "six rows");
    for (const auto &e : expected) {
        const std::string label = std::string(e.outcome) + " <- " + e.det;
        auto it = std::find_if(t.begin(), t.end(), [&](const EffectRow &r) { return r.outcome == e.outcome && r.determinant == e.det; });
        if (it == t.end()) {
            c.check(false, "row " + label + " present");
            continue;
        }
        c.check(it->direct.has_value() == e.direct.has_value(), label + " direct presence");
        c.check(it->indirect.has_value() == e.indirect.has_value(), label + " indirect presence");
        if (it->direct && e.direct) c.near(*it->direct, *e.direct, 0.001, label + " direct");
        if (it->indirect && e.indirect) c.near(*it->indirect, *e.indirect, 0.001, label + " indirect");
        c.near(it->total, e.total, 0.001, label + " total");
    }
    return c;
}

Criterion tracing_properties() {
    Criterion c("tracing equals the recursive oracle; saturated models reproduce their input");
    std::mt19937_64 rng(20200);
    double worst = 0.0;
    for (int rep = 0; rep < 200; ++rep) {
        const auto w = fixtures::random_recursive_model(rng).weights;
        worst = std::max(worst, (reproduced_matrix(w).r - implied_oracle(w).r).cwiseAbs().maxCoeff());
    }
    c.check(worst <= 1e-9, "200 random DAGs within 1e-9, worst " + fmt("%.3g", worst));
    double worst_sat = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        const auto input = fixtures::random_correlation(rng, 2 + rep % 5, 100);
        const auto m = fit_model(input, fixtures::saturated_model(rng, input.names));
        worst_sat = std::max(worst_sat, (reproduced_matrix(m).r - input.r).cwiseAbs().maxCoeff());
    }
    c.check(worst_sat <= 1e-9, "50 saturated fits within 1e-9, worst " + fmt("%.3g", worst_sat));
    return c;
}

Criterion raw_data_properties() {
    Criterion c("raw-data fits equal matrix fits; Mahalanobis sum identity");
    std::mt19937_64 rng(44);
    double worst_beta = 0.0, worst_d2 = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        const int p = 2 + rep % 5;
        const auto n = static_cast<std::size_t>(p + 4 + rep);
        const auto target = fixtures::random_correlation(rng, p, n);
        const auto d = generate_synthetic(target, n, static_cast<std::uint64_t>(rep), true);
        const auto g = fixtures::saturated_model(rng, target.names);
        const auto from_data = fit_model(d, g);
        const auto from_matrix = fit_model(target, g);
        for (const auto &e : g.edges)
            worst_beta = std::max(worst_beta, std::fabs(from_data.path(e.cause, e.effect)->beta -
                                                        from_matrix.path(e.cause, e.effect)->beta));
        double sum = 0.0;
        for (const auto &row : mahalanobis_d2(d)) sum += row.d2;
        worst_d2 = std::max(worst_d2, std::fabs(sum - static_cast<double>((n - 1) * static_cast<std::size_t>(p))));
    }
    c.check(worst_beta <= 1e-9, "beta agreement within 1e-9, worst " + fmt("%.3g", worst_beta));
    c.check(worst_d2 <= 1e-8, "sum of D^2 within 1e-8 of (n-1)p, worst " + fmt("%.3g", worst_d2));
    return c;
}

Criterion determinism() {
    Criterion c("byte-identical CLI output across runs");
    const auto model = fixtures::data_path("initial.model");
    const auto corr = fixtures::data_path("sample.corr");
    auto run = [](const std::vector<std::string> &args) {
        std::ostringstream out, err;
        const int code = run_cli(args, out, err);
        return std::to_string(code) + "\n" + out.str() + err.str();
    };
    for (const std::string format : {"text", "json", "dot"}) {
        const std::vector<std::string> args{"fit", "--model", model, "--corr", corr, "--trim", "--format", format, "--seed", "7"};
        const auto a = run(args);
        c.check(a == run(args), format + " output identical");
        c.check(a.size() > 2, format + " output non-empty");
    }
    const std::vector<std::string> diagram{"diagram", "--model", fixtures::data_path("revised.model"), "--corr", corr};
    c.check(run(diagram) == run(diagram), "diagram output identical");
    return c;
}

} // namespace

int main() {
    const std::vector<std::function<Criterion()>> criteria{
        correlation_pvalues, initial_estimation, trimming,           revised_reproduced,  replay,
        effects,             tracing_properties, raw_data_properties, determinism,
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        try {
            failed += !criteria[i]().report(static_cast<int>(i + 1));
        } catch (const std::exception &e) {
            std::printf("[FAIL] %zu. threw: %s\n", i + 1, e.what());
            ++failed;
        }
    }
    std::printf("%zu criteria, %d failed\n", criteria.size(), failed);
    return failed;
}
