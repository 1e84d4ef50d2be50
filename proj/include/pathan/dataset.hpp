#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "pathan/detail/text.hpp"
#include "pathan/distributions.hpp"
#include "pathan/error.hpp"

namespace pathan {

/// Raw observations, one row per observation and one column per variable.
struct Dataset {
    std::vector<std::string> names;
    Eigen::MatrixXd values;
    std::size_t dropped_rows = 0;

    std::size_t n() const { return static_cast<std::size_t>(values.rows()); }
    std::size_t p() const { return static_cast<std::size_t>(values.cols()); }

    std::ptrdiff_t index_of(const std::string &name) const {
        auto it = std::find(names.begin(), names.end(), name);
        return it == names.end() ? -1 : std::distance(names.begin(), it);
    }

    Eigen::VectorXd column(const std::string &name) const {
        auto j = index_of(name);
        if (j < 0) throw Error(ErrorCode::UnknownVariable, "'" + name + "' is not a dataset column");
        return values.col(j);
    }
};

/// Pearson correlations among named variables together with the sample size
/// they summarize. Model-implied matrices reuse this type.
struct CorrelationMatrix {
    std::vector<std::string> names;
    Eigen::MatrixXd r;
    std::size_t n = 0;

    std::size_t size() const { return names.size(); }

    std::ptrdiff_t index_of(const std::string &name) const {
        auto it = std::find(names.begin(), names.end(), name);
        return it == names.end() ? -1 : std::distance(names.begin(), it);
    }

    std::size_t require(const std::string &name) const {
        auto i = index_of(name);
        if (i < 0) throw Error(ErrorCode::UnknownVariable, "'" + name + "' is not in the correlation matrix");
        return static_cast<std::size_t>(i);
    }

    double at(const std::string &a, const std::string &b) const { return r(require(a), require(b)); }
};

struct SummaryStats {
    std::string name;
    double mean = 0.0;
    double sd = 0.0;
    double min = 0.0;
    double max = 0.0;
    double range = 0.0;
};

enum class Strength { Negligible, Small, Medium, Large };

constexpr std::string_view to_string(Strength s) {
    switch (s) {
    case Strength::Negligible: return "negligible";
    case Strength::Small: return "small";
    case Strength::Medium: return "medium";
    case Strength::Large: return "large";
    }
    return "negligible";
}

namespace detail {

inline void check_names(const std::vector<std::string> &names) {
    std::unordered_set<std::string> seen;
    for (const auto &name : names) {
        if (!valid_name(name)) throw Error(ErrorCode::InvalidName, "invalid variable name '" + name + "'");
        if (!seen.insert(name).second) throw Error(ErrorCode::DuplicateName, "variable '" + name + "' declared twice");
    }
}

inline double sample_sd(const Eigen::Ref<const Eigen::VectorXd> &x) {
    const double mean = x.mean();
    return std::sqrt((x.array() - mean).square().sum() / static_cast<double>(x.size() - 1));
}

// A column counts as constant when its spread is at rounding level
// relative to its magnitude.
inline bool is_constant(const Eigen::Ref<const Eigen::VectorXd> &x) {
    const double scale = std::max(1.0, x.cwiseAbs().maxCoeff());
    return !(sample_sd(x) > 1e-12 * scale);
}

inline void require_nonconstant(const Dataset &d) {
    for (Eigen::Index j = 0; j < d.values.cols(); ++j) {
        if (is_constant(d.values.col(j))) throw Error(ErrorCode::ConstantVariable, d.names[j]);
    }
}

inline double min_eigenvalue(const Eigen::MatrixXd &m) {
    if (m.rows() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

/// mt19937_64 driven Box-Muller; fully specified so fixtures are
/// reproducible across standard libraries.
class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

    double next() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace detail

/// Checks the correlation-matrix invariants, symmetrizing entries that agree
/// within 1e-6. Slightly indefinite matrices (min eigenvalue in
/// [-1e-4, -1e-8)) produce a warning instead of an error.
inline void validate_correlation(CorrelationMatrix &c, std::vector<std::string> *warnings = nullptr) {
    const auto p = static_cast<Eigen::Index>(c.names.size());
    detail::check_names(c.names);
    if (c.r.rows() != p || c.r.cols() != p)
        throw Error(ErrorCode::NonRectangular, "matrix is not " + std::to_string(p) + "x" + std::to_string(p));
    for (Eigen::Index i = 0; i < p; ++i) {
        if (std::fabs(c.r(i, i) - 1.0) > 1e-9)
            throw Error(ErrorCode::DiagonalNotOne, "diagonal entry for '" + c.names[i] + "' is not 1");
        c.r(i, i) = 1.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (!std::isfinite(c.r(i, j)) || std::fabs(c.r(i, j)) > 1.0)
                throw Error(ErrorCode::EntryOutOfRange,
                            "entry (" + c.names[i] + ", " + c.names[j] + ") = " + std::to_string(c.r(i, j)));
        }
        for (Eigen::Index j = 0; j < i; ++j) {
            if (std::fabs(c.r(i, j) - c.r(j, i)) > 1e-6)
                throw Error(ErrorCode::Asymmetric, "entries (" + c.names[i] + ", " + c.names[j] + ") disagree");
            const double mid = 0.5 * (c.r(i, j) + c.r(j, i));
            c.r(i, j) = c.r(j, i) = mid;
        }
    }
    const double lambda = detail::min_eigenvalue(c.r);
    if (lambda < -1e-4)
        throw Error(ErrorCode::NotPositiveSemidefinite, "minimum eigenvalue " + std::to_string(lambda));
    if (lambda < -1e-8 && warnings)
        warnings->push_back("correlation matrix is slightly indefinite (minimum eigenvalue " +
                            std::to_string(lambda) + ")");
}

/// Parses the line-based correlation format:
///
///     n 44
///     vars X1 X2 X3 Y
///     matrix
///     1 .804 -.469 .225
///     ...
inline CorrelationMatrix parse_correlation(const std::string &text, std::vector<std::string> *warnings = nullptr) {
    CorrelationMatrix c;
    bool have_n = false;
    bool have_vars = false;
    bool in_matrix = false;
    std::vector<std::vector<double>> rows;
    int line_no = 0;
    for (const auto &raw : detail::lines_of(text)) {
        ++line_no;
        auto tokens = detail::split_ws(detail::strip_comment(raw));
        if (tokens.empty()) continue;
        auto where = "line " + std::to_string(line_no) + ": ";
        if (in_matrix) {
            std::vector<double> row;
            for (const auto &tok : tokens) {
                auto v = detail::parse_real(tok);
                if (!v) throw Error(ErrorCode::SyntaxError, where + "non-numeric entry '" + tok + "'");
                row.push_back(*v);
            }
            rows.push_back(std::move(row));
            continue;
        }
        if (tokens[0] == "n") {
            if (tokens.size() != 2) throw Error(ErrorCode::SyntaxError, where + "expected 'n <count>'");
            auto v = detail::parse_real(tokens[1]);
            if (!v || *v < 0 || std::floor(*v) != *v)
                throw Error(ErrorCode::SyntaxError, where + "sample size must be a non-negative integer");
            c.n = static_cast<std::size_t>(*v);
            have_n = true;
        } else if (tokens[0] == "vars") {
            c.names.assign(tokens.begin() + 1, tokens.end());
            have_vars = true;
        } else if (tokens[0] == "matrix") {
            if (tokens.size() != 1) throw Error(ErrorCode::SyntaxError, where + "'matrix' takes no arguments");
            in_matrix = true;
        } else {
            throw Error(ErrorCode::SyntaxError, where + "unknown directive '" + tokens[0] + "'");
        }
    }
    if (!have_n) throw Error(ErrorCode::MissingN, "no 'n' line");
    if (!have_vars || c.names.empty()) throw Error(ErrorCode::SyntaxError, "no 'vars' line");
    if (!in_matrix) throw Error(ErrorCode::SyntaxError, "no 'matrix' section");
    const auto p = c.names.size();
    if (rows.size() != p) throw Error(ErrorCode::NonRectangular, "expected " + std::to_string(p) + " matrix rows");
    c.r.resize(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    for (std::size_t i = 0; i < p; ++i) {
        if (rows[i].size() != p)
            throw Error(ErrorCode::NonRectangular, "matrix row " + std::to_string(i + 1) + " has " +
                                                       std::to_string(rows[i].size()) + " entries");
        for (std::size_t j = 0; j < p; ++j) c.r(i, j) = rows[i][j];
    }
    validate_correlation(c, warnings);
    return c;
}

inline CorrelationMatrix load_correlation(const std::string &path, std::vector<std::string> *warnings = nullptr) {
    return parse_correlation(detail::read_file(path), warnings);
}

inline std::string format_correlation(const CorrelationMatrix &c) {
    std::string out = "n " + std::to_string(c.n) + "\nvars";
    for (const auto &name : c.names) out += " " + name;
    out += "\nmatrix\n";
    for (Eigen::Index i = 0; i < c.r.rows(); ++i) {
        for (Eigen::Index j = 0; j < c.r.cols(); ++j) {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", c.r(i, j));
            out += (j ? " " : "") + std::string(buf);
        }
        out += "\n";
    }
    return out;
}

inline const std::set<std::string> &default_missing_tokens() {
    static const std::set<std::string> tokens{"", "NA"};
    return tokens;
}

/// Parses comma-separated data with a header row. Rows holding a missing
/// token or a non-numeric cell are dropped (listwise deletion).
inline Dataset parse_dataset(const std::string &text,
                             const std::set<std::string> &missing_tokens = default_missing_tokens()) {
    auto lines = detail::lines_of(text);
    std::size_t line_idx = 0;
    while (line_idx < lines.size() && detail::trim(lines[line_idx]).empty()) ++line_idx;
    if (line_idx == lines.size()) throw Error(ErrorCode::SyntaxError, "empty dataset");

    Dataset d;
    for (const auto &cell : detail::split(lines[line_idx], ',')) {
        auto name = std::string(detail::trim(cell));
        if (name.size() >= 2 && name.front() == '"' && name.back() == '"') name = name.substr(1, name.size() - 2);
        d.names.push_back(name);
    }
    detail::check_names(d.names);
    const auto p = d.names.size();
    if (p < 2) throw Error(ErrorCode::TooFewVariables, "a dataset needs at least 2 columns");

    std::vector<double> flat;
    std::size_t kept = 0;
    for (++line_idx; line_idx < lines.size(); ++line_idx) {
        const auto &line = lines[line_idx];
        if (detail::trim(line).empty()) continue;
        auto cells = detail::split(line, ',');
        if (cells.size() != p)
            throw Error(ErrorCode::NonRectangular, "line " + std::to_string(line_idx + 1) + " has " +
                                                       std::to_string(cells.size()) + " cells, expected " +
                                                       std::to_string(p));
        std::vector<double> row;
        row.reserve(p);
        for (const auto &cell : cells) {
            auto token = std::string(detail::trim(cell));
            if (missing_tokens.count(token)) break;
            auto v = detail::parse_real(token);
            if (!v) break;
            row.push_back(*v);
        }
        if (row.size() != p) {
            ++d.dropped_rows;
            continue;
        }
        flat.insert(flat.end(), row.begin(), row.end());
        ++kept;
    }
    if (kept < 3)
        throw Error(ErrorCode::TooFewObservations, std::to_string(kept) + " complete rows, need at least 3");
    d.values = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        flat.data(), static_cast<Eigen::Index>(kept), static_cast<Eigen::Index>(p));
    return d;
}

inline Dataset load_dataset(const std::string &path,
                            const std::set<std::string> &missing_tokens = default_missing_tokens()) {
    return parse_dataset(detail::read_file(path), missing_tokens);
}

inline std::string format_dataset(const Dataset &d) {
    std::string out;
    for (std::size_t j = 0; j < d.names.size(); ++j) out += (j ? "," : "") + d.names[j];
    out += "\n";
    for (Eigen::Index i = 0; i < d.values.rows(); ++i) {
        for (Eigen::Index j = 0; j < d.values.cols(); ++j) {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", d.values(i, j));
            out += (j ? "," : "") + std::string(buf);
        }
        out += "\n";
    }
    return out;
}

/// Columns of d restricted to the given names, in that order.
inline Dataset select(const Dataset &d, const std::vector<std::string> &names) {
    Dataset out;
    out.names = names;
    out.dropped_rows = d.dropped_rows;
    out.values.resize(d.values.rows(), static_cast<Eigen::Index>(names.size()));
    for (std::size_t j = 0; j < names.size(); ++j) out.values.col(static_cast<Eigen::Index>(j)) = d.column(names[j]);
    return out;
}

inline CorrelationMatrix select(const CorrelationMatrix &c, const std::vector<std::string> &names) {
    CorrelationMatrix out;
    out.names = names;
    out.n = c.n;
    const auto p = static_cast<Eigen::Index>(names.size());
    out.r.resize(p, p);
    std::vector<std::size_t> idx;
    for (const auto &name : names) idx.push_back(c.require(name));
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < p; ++j) out.r(i, j) = c.r(idx[i], idx[j]);
    return out;
}

inline double pearson(const Eigen::Ref<const Eigen::VectorXd> &x, const Eigen::Ref<const Eigen::VectorXd> &y) {
    const Eigen::ArrayXd xc = x.array() - x.mean();
    const Eigen::ArrayXd yc = y.array() - y.mean();
    const double r = (xc * yc).sum() / std::sqrt(xc.square().sum() * yc.square().sum());
    return std::clamp(r, -1.0, 1.0);
}

/// Average ranks (1-based), ties share their mean rank.
inline Eigen::VectorXd ranks(const Eigen::Ref<const Eigen::VectorXd> &x) {
    const auto n = x.size();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n;) {
        Eigen::Index j = i;
        while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (Eigen::Index k = i; k <= j; ++k) out[order[k]] = avg;
        i = j + 1;
    }
    return out;
}

inline double spearman(const Eigen::Ref<const Eigen::VectorXd> &x, const Eigen::Ref<const Eigen::VectorXd> &y) {
    return pearson(ranks(x), ranks(y));
}

inline CorrelationMatrix pearson_matrix(const Dataset &d) {
    detail::require_nonconstant(d);
    const Eigen::MatrixXd centered = d.values.rowwise() - d.values.colwise().mean();
    const Eigen::MatrixXd cross = centered.transpose() * centered;
    const Eigen::VectorXd scale = cross.diagonal().cwiseSqrt().cwiseInverse();
    CorrelationMatrix c;
    c.names = d.names;
    c.n = d.n();
    c.r = scale.asDiagonal() * cross * scale.asDiagonal();
    for (Eigen::Index i = 0; i < c.r.rows(); ++i) {
        c.r(i, i) = 1.0;
        for (Eigen::Index j = 0; j < i; ++j) {
            const double v = std::clamp(0.5 * (c.r(i, j) + c.r(j, i)), -1.0, 1.0);
            c.r(i, j) = c.r(j, i) = v;
        }
    }
    return c;
}

/// Two-tailed significance of a sample correlation, t = r sqrt(n-2)/sqrt(1-r^2).
inline double correlation_pvalue(double r, std::size_t n) {
    if (n < 3) throw Error(ErrorCode::TooFewObservations, "correlation test needs n >= 3");
    if (!(std::fabs(r) <= 1.0)) throw Error(ErrorCode::EntryOutOfRange, "|r| > 1");
    if (std::fabs(r) == 1.0) return 0.0;
    const auto df = static_cast<long long>(n) - 2;
    const double t = r * std::sqrt(static_cast<double>(df)) / std::sqrt(1.0 - r * r);
    return p_value_from_t(t, df);
}

inline Strength strength_label(double r) {
    const double a = std::fabs(r);
    if (a < 0.1) return Strength::Negligible;
    if (a < 0.3) return Strength::Small;
    if (a < 0.5) return Strength::Medium;
    return Strength::Large;
}

inline Dataset standardize(const Dataset &d) {
    detail::require_nonconstant(d);
    Dataset out = d;
    for (Eigen::Index j = 0; j < out.values.cols(); ++j) {
        auto col = out.values.col(j);
        col.array() -= col.mean();
        col /= detail::sample_sd(col);
    }
    return out;
}

inline std::vector<SummaryStats> summary_stats(const Dataset &d) {
    std::vector<SummaryStats> out;
    for (Eigen::Index j = 0; j < d.values.cols(); ++j) {
        const auto col = d.values.col(j);
        SummaryStats s;
        s.name = d.names[j];
        s.mean = col.mean();
        s.sd = detail::sample_sd(col);
        s.min = col.minCoeff();
        s.max = col.maxCoeff();
        s.range = s.max - s.min;
        out.push_back(s);
    }
    return out;
}

/// Draws n observations whose population correlation is target. In exact
/// mode the draws are whitened to a sample identity before recoloring, so the
/// sample correlation equals target up to rounding.
inline Dataset generate_synthetic(const CorrelationMatrix &target, std::size_t n, std::uint64_t seed, bool exact) {
    const auto p = static_cast<Eigen::Index>(target.size());
    if (p < 1) throw Error(ErrorCode::TooFewVariables, "empty target");
    if (n < 3) throw Error(ErrorCode::TooFewObservations, "need n >= 3");
    if (exact && n <= static_cast<std::size_t>(p))
        throw Error(ErrorCode::InsufficientN, "exact synthesis needs n > p");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(target.r);
    if (es.eigenvalues().minCoeff() < -1e-4)
        throw Error(ErrorCode::NotPositiveSemidefinite, "target has a negative eigenvalue");
    const Eigen::MatrixXd root = es.eigenvectors() *
                                 es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                                 es.eigenvectors().transpose();

    detail::NormalStream normal(seed);
    Eigen::MatrixXd z(static_cast<Eigen::Index>(n), p);
    for (Eigen::Index i = 0; i < z.rows(); ++i)
        for (Eigen::Index j = 0; j < p; ++j) z(i, j) = normal.next();

    if (exact) {
        z = z.rowwise() - z.colwise().mean();
        const Eigen::MatrixXd cov = z.transpose() * z / static_cast<double>(n - 1);
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() != Eigen::Success) throw Error(ErrorCode::CollinearColumns, "degenerate draw");
        // z L^{-T}: sample covariance becomes the identity
        z = llt.matrixL().solve(z.transpose()).transpose();
    }

    Dataset d;
    d.names = target.names;
    d.values = z * root;
    return d;
}

} // namespace pathan
