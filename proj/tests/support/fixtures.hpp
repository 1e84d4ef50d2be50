#pragma once

// Shared fixtures and test-only oracles. Nothing here calls into the
// library's numerical routines, so the oracles stay independent of the code
// they check.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pathan/causal_model.hpp"
#include "pathan/dataset.hpp"

namespace fixtures {

inline std::string data_path(const std::string &name) { return std::string(PATHAN_DATA_DIR) + "/" + name; }

/// Sample observed correlation matrix, n = 44.
inline pathan::CorrelationMatrix sample_corr() {
    pathan::CorrelationMatrix c;
    c.names = {"X1", "X2", "X3", "Y"};
    c.n = 44;
    c.r.resize(4, 4);
    c.r << 1, .804, -.469, .225,   //
        .804, 1, -.613, .276,      //
        -.469, -.613, 1, -.493,    //
        .225, .276, -.493, 1;
    return c;
}

inline pathan::CausalGraph initial_model() {
    return {{"X1", "X2", "X3", "Y"},
            {{"X1", "X2"}, {"X1", "X3"}, {"X2", "X3"}, {"X1", "Y"}, {"X2", "Y"}, {"X3", "Y"}},
            {}};
}

inline pathan::CausalGraph revised_model() {
    return {{"X1", "X2", "X3", "Y"}, {{"X1", "X2"}, {"X2", "X3"}, {"X3", "Y"}}, {}};
}

/// Gauss-Jordan elimination with partial pivoting on a plain row-major
/// system; the normal-equations oracle.
inline std::vector<double> solve_normal_equations(std::vector<std::vector<double>> a, std::vector<double> b) {
    const auto n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
        std::swap(a[col], a[piv]);
        std::swap(b[col], b[piv]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[r][col] / a[col][col];
            for (std::size_t k = col; k < n; ++k) a[r][k] -= f * a[col][k];
            b[r] -= f * b[col];
        }
    }
    for (std::size_t i = 0; i < n; ++i) b[i] /= a[i][i];
    return b;
}

struct OracleFit {
    std::vector<double> beta;
    double r2 = 0.0;
};

inline OracleFit regress(const pathan::CorrelationMatrix &c, const std::string &y, const std::vector<std::string> &xs) {
    std::vector<std::vector<double>> a(xs.size(), std::vector<double>(xs.size()));
    std::vector<double> b(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        b[i] = c.at(xs[i], y);
        for (std::size_t j = 0; j < xs.size(); ++j) a[i][j] = c.at(xs[i], xs[j]);
    }
    OracleFit f;
    f.beta = solve_normal_equations(a, b);
    for (std::size_t i = 0; i < xs.size(); ++i) f.r2 += f.beta[i] * b[i];
    return f;
}

/// Two-tailed t probability by composite Simpson quadrature of the density.
inline double t_two_tailed_by_quadrature(double t, double df, int intervals = 20000) {
    const double c = std::exp(std::lgamma(0.5 * (df + 1)) - std::lgamma(0.5 * df)) / std::sqrt(df * std::numbers::pi);
    auto f = [&](double x) { return c * std::pow(1.0 + x * x / df, -0.5 * (df + 1)); };
    const double b = std::fabs(t);
    const double h = b / intervals;
    double s = f(0) + f(b);
    for (int i = 1; i < intervals; ++i) s += f(i * h) * (i % 2 ? 4.0 : 2.0);
    return 1.0 - 2.0 * s * h / 3.0;
}

/// Random recursive model: p in [2, 6], random causal order hidden behind a
/// shuffled declaration order, random arcs among exogenous variables.
struct RandomModel {
    pathan::PathWeights weights;
};

inline RandomModel random_recursive_model(std::mt19937_64 &rng, bool with_covary = true) {
    std::uniform_int_distribution<int> size(2, 6);
    std::uniform_real_distribution<double> coef(-0.9, 0.9);
    std::bernoulli_distribution edge(0.5), arc(0.3);
    const int p = size(rng);
    std::vector<std::string> causal;
    for (int i = 0; i < p; ++i) causal.push_back("V" + std::to_string(i));
    pathan::CausalGraph g;
    g.variables = causal;
    std::shuffle(g.variables.begin(), g.variables.end(), rng);
    std::vector<double> w;
    for (int i = 0; i < p; ++i)
        for (int j = i + 1; j < p; ++j)
            if (edge(rng)) {
                g.edges.push_back({causal[i], causal[j]});
                w.push_back(coef(rng));
            }
    std::vector<double> cw;
    if (with_covary) {
        std::vector<std::string> exo;
        for (const auto &v : g.variables)
            if (g.is_exogenous(v)) exo.push_back(v);
        for (std::size_t a = 0; a < exo.size(); ++a)
            for (std::size_t b = a + 1; b < exo.size(); ++b)
                if (arc(rng)) {
                    auto first = exo[a], second = exo[b];
                    if (g.index_of(second) < g.index_of(first)) std::swap(first, second);
                    g.covary.push_back({first, second});
                    cw.push_back(coef(rng));
                }
    }
    return {{g, w, cw}};
}

/// Random positive definite correlation matrix of size p.
inline pathan::CorrelationMatrix random_correlation(std::mt19937_64 &rng, int p, std::size_t n) {
    std::normal_distribution<double> z;
    Eigen::MatrixXd a(p, p + 2);
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) a(i, j) = z(rng);
    Eigen::MatrixXd s = a * a.transpose();
    Eigen::VectorXd d = s.diagonal().cwiseSqrt().cwiseInverse();
    pathan::CorrelationMatrix c;
    for (int i = 0; i < p; ++i) c.names.push_back("V" + std::to_string(i));
    c.r = d.asDiagonal() * s * d.asDiagonal();
    for (int i = 0; i < p; ++i) c.r(i, i) = 1.0;
    c.r = 0.5 * (c.r + c.r.transpose()).eval();
    c.n = n;
    return c;
}

/// Every edge consistent with a random causal order over c's variables.
inline pathan::CausalGraph saturated_model(std::mt19937_64 &rng, const std::vector<std::string> &names) {
    pathan::CausalGraph g;
    g.variables = names;
    auto order = names;
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i = 0; i < order.size(); ++i)
        for (std::size_t j = i + 1; j < order.size(); ++j) g.edges.push_back({order[i], order[j]});
    return g;
}

} // namespace fixtures
