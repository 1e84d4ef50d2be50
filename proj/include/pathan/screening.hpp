#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pathan/causal_model.hpp"
#include "pathan/dataset.hpp"
#include "pathan/distributions.hpp"
#include "pathan/estimator.hpp"

namespace pathan {

inline constexpr double outlier_tail = 0.001;
inline constexpr double vif_limit = 10.0;
inline constexpr double linearity_gap = 0.1;
inline constexpr double screening_alpha = 0.05;

struct OutlierRow {
    std::size_t row = 0; // zero-based row of the screened dataset
    double d2 = 0.0;
    bool flagged = false;
};

struct NormalityResult {
    std::string name;
    double d = 0.0;
    double critical = 0.0;
    bool pass = true;
};

struct VifEntry {
    std::string predictor;
    double vif = 1.0;
    bool flagged = false;
};

struct HeteroscedasticityResult {
    double lm = 0.0;
    double p = 1.0;
    bool flagged = false;
};

struct LinearityEntry {
    std::string first;
    std::string second;
    double pearson = 0.0;
    double spearman = 0.0;
    bool gap = false; // advisory only
};

struct ScreeningReport {
    std::vector<OutlierRow> outliers; // every row, flagged or not
    double outlier_cutoff = 0.0;
    std::vector<NormalityResult> normality;
    std::string vif_equation;
    std::vector<VifEntry> vif;
    std::string heteroscedasticity_equation;
    std::optional<HeteroscedasticityResult> heteroscedasticity;
    std::vector<SummaryStats> ranges;
    std::vector<LinearityEntry> linearity;

    std::vector<OutlierRow> flagged_outliers() const {
        std::vector<OutlierRow> out;
        std::copy_if(outliers.begin(), outliers.end(), std::back_inserter(out),
                     [](const OutlierRow &o) { return o.flagged; });
        return out;
    }

    bool normality_pass() const {
        return std::all_of(normality.begin(), normality.end(), [](const auto &r) { return r.pass; });
    }

    bool vif_pass() const {
        return std::none_of(vif.begin(), vif.end(), [](const auto &v) { return v.flagged; });
    }

    bool all_pass() const {
        return flagged_outliers().empty() && normality_pass() && vif_pass() &&
               !(heteroscedasticity && heteroscedasticity->flagged);
    }
};

/// Squared Mahalanobis distance of every row from the column means under the
/// n-1 sample covariance. Rows beyond the chi-square(p) 0.999 quantile are flagged.
inline std::vector<OutlierRow> mahalanobis_d2(const Dataset &d) {
    const auto p = d.p();
    if (d.n() <= p) throw Error(ErrorCode::InsufficientN, "Mahalanobis distance needs n > p");
    // standardizing first makes the pivot check scale-free; D^2 is affine invariant
    const Dataset z = standardize(d);
    const Eigen::MatrixXd corr = z.values.transpose() * z.values / static_cast<double>(d.n() - 1);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(corr);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > singular_pivot))
        throw Error(ErrorCode::CollinearColumns, "sample covariance is singular");
    const Eigen::MatrixXd solved = ldlt.solve(z.values.transpose());
    const double cutoff = chi_square_upper_quantile(static_cast<double>(p), outlier_tail);
    std::vector<OutlierRow> out;
    for (Eigen::Index i = 0; i < z.values.rows(); ++i) {
        const double d2 = std::max(0.0, z.values.row(i).dot(solved.col(i)));
        out.push_back({static_cast<std::size_t>(i), d2, d2 > cutoff});
    }
    return out;
}

/// Critical value of the Lilliefors-corrected KS statistic at alpha = 0.05.
inline double lilliefors_critical(std::size_t n) {
    const double rn = std::sqrt(static_cast<double>(n));
    return 0.895 / (rn - 0.01 + 0.85 / rn);
}

/// KS distance between the sample and a normal with the sample's own mean
/// and sd.
inline double ks_statistic_normal(const Eigen::Ref<const Eigen::VectorXd> &column) {
    const auto n = column.size();
    std::vector<double> x(column.data(), column.data() + n);
    std::sort(x.begin(), x.end());
    const double mean = column.mean();
    const double sd = detail::sample_sd(column);
    double d = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double f = normal_cdf((x[static_cast<std::size_t>(i)] - mean) / sd);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return std::clamp(d, 0.0, 1.0);
}

inline NormalityResult normality_ks(const Eigen::Ref<const Eigen::VectorXd> &column, std::string name = {}) {
    const auto n = static_cast<std::size_t>(column.size());
    if (n < 4) throw Error(ErrorCode::TooFewObservations, "normality test needs n >= 4");
    if (detail::is_constant(column)) throw Error(ErrorCode::ConstantVariable, name.empty() ? "column" : name);
    NormalityResult r;
    r.name = std::move(name);
    r.d = ks_statistic_normal(column);
    r.critical = lilliefors_critical(n);
    r.pass = r.d <= r.critical;
    return r;
}

/// VIF of each predictor: the diagonal of the inverse predictor correlation
/// block, i.e. 1 / (1 - R^2) of that predictor on the others.
inline std::vector<VifEntry> vif_scores(const CorrelationMatrix &c, const std::vector<std::string> &predictors) {
    if (predictors.size() < 2) throw Error(ErrorCode::InvalidArgument, "VIF needs at least 2 predictors");
    const auto sub = select(c, predictors);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(sub.r);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > singular_pivot))
        throw Error(ErrorCode::SingularSubmatrix, "predictors are perfectly collinear");
    const auto k = static_cast<Eigen::Index>(predictors.size());
    const Eigen::MatrixXd inv = ldlt.solve(Eigen::MatrixXd::Identity(k, k));
    std::vector<VifEntry> out;
    for (Eigen::Index j = 0; j < k; ++j) {
        const double v = std::max(1.0, inv(j, j));
        out.push_back({predictors[static_cast<std::size_t>(j)], v, v > vif_limit});
    }
    return out;
}

/// Breusch-Pagan (studentized) check: LM = n R^2 of squared scaled residuals
/// on the fitted values, referred to chi-square(1).
inline HeteroscedasticityResult heteroscedasticity_check(const Eigen::Ref<const Eigen::VectorXd> &residuals,
                                                         const Eigen::Ref<const Eigen::VectorXd> &fitted) {
    if (residuals.size() != fitted.size())
        throw Error(ErrorCode::InvalidArgument, "residuals and fitted values differ in length");
    if (residuals.size() < 5) throw Error(ErrorCode::TooFewObservations, "heteroscedasticity check needs n >= 5");
    if (detail::is_constant(fitted)) throw Error(ErrorCode::ConstantVariable, "fitted values");
    const auto n = static_cast<double>(residuals.size());
    Eigen::VectorXd sq = residuals.array().square();
    HeteroscedasticityResult out;
    const double scale = sq.mean();
    if (!(scale > 0.0)) return out;
    sq /= scale;
    if (detail::is_constant(sq)) return out;
    const double r = pearson(sq, fitted);
    out.lm = n * r * r;
    out.p = chi_square1_sf(out.lm);
    out.flagged = out.p < screening_alpha;
    return out;
}

/// Runs every pre-analysis check on the model's variables.
inline ScreeningReport screen_report(const Dataset &d, const CausalGraph &g) {
    for (const auto &v : g.variables) {
        if (d.index_of(v) < 0) throw Error(ErrorCode::UnknownVariable, "'" + v + "' is not a dataset column");
    }
    validate_graph(g);
    const Dataset sel = select(d, g.variables);

    ScreeningReport rep;
    rep.outliers = mahalanobis_d2(sel);
    rep.outlier_cutoff = chi_square_upper_quantile(static_cast<double>(sel.p()), outlier_tail);
    for (std::size_t j = 0; j < sel.p(); ++j)
        rep.normality.push_back(normality_ks(sel.values.col(static_cast<Eigen::Index>(j)), sel.names[j]));

    // the equation with the most predictors (latest in causal order on ties)
    const auto equations = equations_for(g);
    const StructuralEquation *widest = nullptr;
    for (const auto &eq : equations) {
        if (!widest || eq.predictors.size() >= widest->predictors.size()) widest = &eq;
    }
    if (widest) {
        if (widest->predictors.size() >= 2) {
            rep.vif_equation = widest->outcome;
            rep.vif = vif_scores(pearson_matrix(sel), widest->predictors);
        }
        const auto res = equation_residuals(sel, *widest);
        rep.heteroscedasticity_equation = widest->outcome;
        rep.heteroscedasticity = heteroscedasticity_check(res.residuals, res.fitted);
    }

    rep.ranges = summary_stats(sel);
    for (std::size_t a = 0; a < sel.p(); ++a) {
        for (std::size_t b = a + 1; b < sel.p(); ++b) {
            const auto x = sel.values.col(static_cast<Eigen::Index>(a));
            const auto y = sel.values.col(static_cast<Eigen::Index>(b));
            LinearityEntry e{sel.names[a], sel.names[b], pearson(x, y), spearman(x, y), false};
            e.gap = std::fabs(e.spearman) - std::fabs(e.pearson) > linearity_gap;
            rep.linearity.push_back(e);
        }
    }
    return rep;
}

} // namespace pathan
