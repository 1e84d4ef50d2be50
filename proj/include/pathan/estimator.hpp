#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pathan/causal_model.hpp"
#include "pathan/dataset.hpp"
#include "pathan/distributions.hpp"
#include "pathan/error.hpp"

namespace pathan {

/// Smallest admissible pivot of a standardized predictor system.
inline constexpr double singular_pivot = 1e-10;

struct PathEstimate {
    std::string predictor;
    double beta = 0.0;
    double se = 0.0;
    double t = 0.0;
    double p = 1.0;
};

/// Standardized least-squares fit of one structural equation.
struct EquationFit {
    std::string outcome;
    std::vector<PathEstimate> paths;
    double r2 = 0.0;
    double residual_variance = 1.0;
    std::size_t n = 0;
    long long df = 0;

    const PathEstimate *find(const std::string &predictor) const {
        for (const auto &p : paths) {
            if (p.predictor == predictor) return &p;
        }
        return nullptr;
    }
};

struct FittedModel {
    CausalGraph graph;
    std::vector<EquationFit> fits; // endogenous variables in topological order
    CorrelationMatrix correlation;
    double alpha = 0.05;

    const EquationFit &equation(const std::string &outcome) const {
        for (const auto &f : fits) {
            if (f.outcome == outcome) return f;
        }
        throw Error(ErrorCode::NotEndogenous, "'" + outcome + "' has no structural equation");
    }

    std::optional<PathEstimate> path(const std::string &cause, const std::string &effect) const {
        for (const auto &f : fits) {
            if (f.outcome != effect) continue;
            if (const auto *p = f.find(cause)) return *p;
        }
        return std::nullopt;
    }

    bool significant(const std::string &cause, const std::string &effect) const {
        auto p = path(cause, effect);
        return p && p->p < alpha;
    }

    /// Estimated coefficients on the edges; arcs carry the observed correlation.
    PathWeights weights() const {
        PathWeights w{graph, {}, {}};
        for (const auto &e : graph.edges) w.edge.push_back(path(e.cause, e.effect).value().beta);
        for (const auto &c : graph.covary) w.covary.push_back(correlation.at(c.first, c.second));
        return w;
    }
};

namespace detail {

inline void fill_inference(EquationFit &fit, const Eigen::VectorXd &beta, const Eigen::VectorXd &inv_diag,
                           const std::vector<std::string> &predictors) {
    const double unexplained = std::max(0.0, 1.0 - fit.r2);
    fit.residual_variance = std::clamp(1.0 - fit.r2, 0.0, 1.0);
    for (std::size_t j = 0; j < predictors.size(); ++j) {
        PathEstimate est;
        est.predictor = predictors[j];
        est.beta = beta[static_cast<Eigen::Index>(j)];
        est.se = std::sqrt(unexplained * inv_diag[static_cast<Eigen::Index>(j)] / static_cast<double>(fit.df));
        if (est.se > 0.0)
            est.t = est.beta / est.se;
        else
            est.t = est.beta == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), est.beta);
        est.p = p_value_from_t(est.t, fit.df);
        fit.paths.push_back(est);
    }
}

inline void check_equation_size(const StructuralEquation &eq, std::size_t n) {
    if (eq.predictors.empty()) throw Error(ErrorCode::InvalidArgument, "equation for '" + eq.outcome + "' is empty");
    if (n <= eq.predictors.size() + 1)
        throw Error(ErrorCode::InsufficientN, "n = " + std::to_string(n) + " with " +
                                                  std::to_string(eq.predictors.size()) + " predictors of '" +
                                                  eq.outcome + "'");
}

} // namespace detail

/// Solves R_xx beta = r_xy with a pivoted LDL^T factorization of the
/// predictor block of c.
inline EquationFit fit_equation(const CorrelationMatrix &c, const StructuralEquation &eq) {
    detail::check_equation_size(eq, c.n);
    const auto k = static_cast<Eigen::Index>(eq.predictors.size());
    const auto y = c.require(eq.outcome);
    std::vector<std::size_t> x;
    for (const auto &name : eq.predictors) x.push_back(c.require(name));

    Eigen::MatrixXd rxx(k, k);
    Eigen::VectorXd rxy(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        rxy[i] = c.r(x[i], y);
        for (Eigen::Index j = 0; j < k; ++j) rxx(i, j) = c.r(x[i], x[j]);
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(rxx);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > singular_pivot))
        throw Error(ErrorCode::SingularPredictors, "predictors of '" + eq.outcome + "' are collinear");

    const Eigen::VectorXd beta = ldlt.solve(rxy);
    const Eigen::MatrixXd inv = ldlt.solve(Eigen::MatrixXd::Identity(k, k));

    EquationFit fit;
    fit.outcome = eq.outcome;
    fit.n = c.n;
    fit.df = static_cast<long long>(c.n) - k - 1;
    fit.r2 = beta.dot(rxy);
    detail::fill_inference(fit, beta, inv.diagonal(), eq.predictors);
    return fit;
}

/// Same fit computed from raw observations: standardize, then QR least
/// squares without an intercept.
inline EquationFit fit_equation(const Dataset &d, const StructuralEquation &eq) {
    detail::check_equation_size(eq, d.n());
    std::vector<std::string> cols = eq.predictors;
    cols.push_back(eq.outcome);
    const Dataset z = standardize(select(d, cols));
    const auto k = static_cast<Eigen::Index>(eq.predictors.size());
    const Eigen::MatrixXd x = z.values.leftCols(k);
    const Eigen::VectorXd y = z.values.col(k);

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    qr.setThreshold(singular_pivot);
    if (qr.rank() < k) throw Error(ErrorCode::SingularPredictors, "predictors of '" + eq.outcome + "' are collinear");
    const Eigen::VectorXd beta = qr.solve(y);
    const double rss = (y - x * beta).squaredNorm();
    const double tss = static_cast<double>(d.n() - 1);
    const Eigen::MatrixXd xtx_inv = (x.transpose() * x).inverse() * tss;

    EquationFit fit;
    fit.outcome = eq.outcome;
    fit.n = d.n();
    fit.df = static_cast<long long>(d.n()) - k - 1;
    fit.r2 = 1.0 - rss / tss;
    detail::fill_inference(fit, beta, xtx_inv.diagonal(), eq.predictors);
    return fit;
}

/// Standardized fitted values and residuals of one equation on raw data.
struct EquationResiduals {
    Eigen::VectorXd fitted;
    Eigen::VectorXd residuals;
};

inline EquationResiduals equation_residuals(const Dataset &d, const StructuralEquation &eq) {
    auto fit = fit_equation(d, eq);
    std::vector<std::string> cols = eq.predictors;
    cols.push_back(eq.outcome);
    const Dataset z = standardize(select(d, cols));
    const auto k = static_cast<Eigen::Index>(eq.predictors.size());
    Eigen::VectorXd beta(k);
    for (Eigen::Index j = 0; j < k; ++j) beta[j] = fit.paths[static_cast<std::size_t>(j)].beta;
    EquationResiduals out;
    out.fitted = z.values.leftCols(k) * beta;
    out.residuals = z.values.col(k) - out.fitted;
    return out;
}

inline FittedModel fit_model(const CorrelationMatrix &c, const CausalGraph &g, double alpha = 0.05) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1]");
    validate_graph(g);
    for (const auto &v : g.variables) c.require(v);
    FittedModel m;
    m.graph = g;
    m.correlation = select(c, g.variables);
    m.alpha = alpha;
    for (const auto &eq : equations_for(g)) m.fits.push_back(fit_equation(m.correlation, eq));
    return m;
}

inline FittedModel fit_model(const Dataset &d, const CausalGraph &g, double alpha = 0.05) {
    for (const auto &v : g.variables) {
        if (d.index_of(v) < 0) throw Error(ErrorCode::UnknownVariable, "'" + v + "' is not a dataset column");
    }
    return fit_model(pearson_matrix(select(d, g.variables)), g, alpha);
}

} // namespace pathan
