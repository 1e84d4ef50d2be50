#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "pathan/screening.hpp"
#include "support/fixtures.hpp"

using namespace pathan;

namespace {

Dataset make(std::vector<std::string> names, Eigen::MatrixXd values) {
    Dataset d;
    d.names = std::move(names);
    d.values = std::move(values);
    return d;
}

Eigen::VectorXd normal_quantile_column(int n) {
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x[i] = normal_quantile((i + 0.5) / n);
    return x;
}

Eigen::VectorXd uniform_grid(int n) {
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x[i] = static_cast<double>(i) / (n - 1);
    return x;
}

// Independent D^2 via an explicit covariance inverse on the raw data.
std::vector<double> d2_oracle(const Eigen::MatrixXd &x) {
    const Eigen::RowVectorXd mean = x.colwise().mean();
    const Eigen::MatrixXd c = x.rowwise() - mean;
    const Eigen::MatrixXd s = c.transpose() * c / static_cast<double>(x.rows() - 1);
    const Eigen::MatrixXd inv = s.fullPivLu().inverse();
    std::vector<double> out;
    for (Eigen::Index i = 0; i < x.rows(); ++i) out.push_back(c.row(i) * inv * c.row(i).transpose());
    return out;
}

} // namespace

TEST(Mahalanobis, SumIdentity) {
    std::mt19937_64 rng(8);
    for (int rep = 0; rep < 30; ++rep) {
        const int p = 2 + rep % 4;
        const auto n = static_cast<std::size_t>(p + 3 + rep);
        const auto d = generate_synthetic(fixtures::random_correlation(rng, p, n), n, rep, rep % 2);
        double sum = 0.0;
        for (const auto &row : mahalanobis_d2(d)) {
            EXPECT_GE(row.d2, 0.0);
            sum += row.d2;
        }
        EXPECT_NEAR(sum, static_cast<double>((n - 1) * p), 1e-8);
    }
}

TEST(Mahalanobis, MatchesExplicitInverse) {
    std::mt19937_64 rng(9);
    const auto d = generate_synthetic(fixtures::random_correlation(rng, 3, 25), 25, 1, false);
    auto scaled = d;
    scaled.values.col(0) *= 1e4;
    scaled.values.col(2).array() += 50.0;
    const auto oracle = d2_oracle(d.values);
    const auto rows = mahalanobis_d2(scaled);
    for (std::size_t i = 0; i < oracle.size(); ++i) EXPECT_NEAR(rows[i].d2, oracle[i], 1e-9);
}

TEST(Mahalanobis, OneDimensionalIsSquaredZ) {
    Eigen::MatrixXd v(6, 1);
    v << 2, 4, 4, 5, 7, 9;
    const double mean = v.mean();
    const double sd = std::sqrt((v.array() - mean).square().sum() / 5.0);
    const auto rows = mahalanobis_d2(make({"x"}, v));
    for (int i = 0; i < 6; ++i) EXPECT_NEAR(rows[static_cast<std::size_t>(i)].d2, std::pow((v(i, 0) - mean) / sd, 2), 1e-12);
}

TEST(Mahalanobis, SingleFarPointFlagged) {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> z(0.0, 0.3);
    Eigen::MatrixXd v(21, 2);
    for (int i = 0; i < 20; ++i) v.row(i) << z(rng), z(rng);
    v.row(20) << 10, 10;
    const auto rows = mahalanobis_d2(make({"a", "b"}, v));
    const auto oracle = d2_oracle(v);
    const auto far = std::max_element(oracle.begin(), oracle.end()) - oracle.begin();
    EXPECT_EQ(far, 20);
    for (const auto &r : rows) EXPECT_EQ(r.flagged, r.row == 20u) << "row " << r.row;
}

TEST(Mahalanobis, CollinearThrows) {
    Eigen::MatrixXd v(5, 2);
    v << 1, 2, 2, 4, 3, 6, 4, 8, 5, 10.0000000000001;
    try {
        mahalanobis_d2(make({"a", "b"}, v));
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), ErrorCode::CollinearColumns);
    }
}

TEST(NormalityKs, NormalQuantilesPass) {
    const auto r = normality_ks(normal_quantile_column(50), "q");
    EXPECT_TRUE(r.pass);
    EXPECT_LT(r.d, 0.05);
    EXPECT_NEAR(r.critical, 0.895 / (std::sqrt(50.0) - 0.01 + 0.85 / std::sqrt(50.0)), 1e-15);
}

// Brute-force statistic: sup over a dense grid of |F_n(x) - Phi(x)| evaluated
// at both sides of every jump.
double ks_oracle(const Eigen::VectorXd &x) {
    const double mean = x.mean();
    const double sd = std::sqrt((x.array() - mean).square().sum() / static_cast<double>(x.size() - 1));
    std::vector<double> s(x.data(), x.data() + x.size());
    std::sort(s.begin(), s.end());
    const double n = static_cast<double>(s.size());
    double best = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double f = 0.5 * std::erfc(-(s[i] - mean) / sd / std::sqrt(2.0));
        const double below = static_cast<double>(std::lower_bound(s.begin(), s.end(), s[i]) - s.begin()) / n;
        const double upto = static_cast<double>(std::upper_bound(s.begin(), s.end(), s[i]) - s.begin()) / n;
        best = std::max({best, std::fabs(upto - f), std::fabs(f - below)});
    }
    return best;
}

TEST(NormalityKs, UniformGridNearTheBoundary) {
    // at n = 200 the grid's D sits just under the critical value
    const auto at200 = normality_ks(uniform_grid(200), "u");
    EXPECT_NEAR(at200.d, ks_oracle(uniform_grid(200)), 1e-12);
    EXPECT_NEAR(at200.d, 0.0591, 5e-4);
    EXPECT_TRUE(at200.pass);
    const auto at400 = normality_ks(uniform_grid(400), "u");
    EXPECT_FALSE(at400.pass);
    EXPECT_GT(at400.d, at400.critical);
}

TEST(NormalityKs, LillieforsSizeBySimulation) {
    // rejection rate on normal samples should sit near 5%
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> z;
    int rejected = 0;
    const int reps = 2000;
    for (int rep = 0; rep < reps; ++rep) {
        Eigen::VectorXd x(40);
        for (auto &v : x) v = z(rng);
        rejected += !normality_ks(x).pass;
    }
    EXPECT_GT(rejected, reps * 0.03);
    EXPECT_LT(rejected, reps * 0.07);
}

TEST(NormalityKs, MatchesOracleAndAffineInvariant) {
    std::mt19937_64 rng(5);
    std::exponential_distribution<double> e;
    for (int rep = 0; rep < 20; ++rep) {
        Eigen::VectorXd x(30 + rep);
        for (auto &v : x) v = e(rng);
        const double d = normality_ks(x).d;
        EXPECT_NEAR(d, ks_oracle(x), 1e-12);
        EXPECT_GE(d, 0.0);
        EXPECT_LE(d, 1.0);
        Eigen::VectorXd y = (-3.5 * x).array() + 17.0;
        EXPECT_NEAR(normality_ks(y).d, d, 1e-12);
    }
}

TEST(NormalityKs, Preconditions) {
    Eigen::VectorXd three(3);
    three << 1, 2, 3;
    try {
        normality_ks(three);
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), ErrorCode::TooFewObservations);
    }
    EXPECT_THROW(normality_ks(Eigen::VectorXd::Constant(10, 2.0)), Error);
}

TEST(Vif, OrthogonalPredictors) {
    CorrelationMatrix c{{"a", "b", "c"}, Eigen::MatrixXd::Identity(3, 3), 30};
    for (const auto &v : vif_scores(c, {"a", "b", "c"})) {
        EXPECT_EQ(v.vif, 1.0);
        EXPECT_FALSE(v.flagged);
    }
}

TEST(Vif, DuplicatedPredictor) {
    CorrelationMatrix c{{"a", "b", "c"}, Eigen::MatrixXd::Identity(3, 3), 30};
    c.r(0, 1) = c.r(1, 0) = 1.0;
    try {
        vif_scores(c, {"a", "b", "c"});
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), ErrorCode::SingularSubmatrix);
    }
}

TEST(Vif, SamplePredictors) {
    const auto c = fixtures::sample_corr();
    const auto vifs = vif_scores(c, {"X1", "X2", "X3"});
    const auto r2 = fixtures::regress(c, "X2", {"X1", "X3"}).r2;
    EXPECT_NEAR(r2, 0.7178, 1e-4);
    EXPECT_NEAR(vifs[1].vif, 1.0 / (1.0 - r2), 1e-12);
    EXPECT_NEAR(vifs[1].vif, 3.543, 0.01);
    EXPECT_NEAR(vifs[0].vif, 1.0 / (1.0 - fixtures::regress(c, "X1", {"X2", "X3"}).r2), 1e-12);
    EXPECT_NEAR(vifs[2].vif, 1.0 / (1.0 - fixtures::regress(c, "X3", {"X1", "X2"}).r2), 1e-12);
}

TEST(Vif, SignFlipInvariantAndAtLeastOne) {
    std::mt19937_64 rng(12);
    for (int rep = 0; rep < 20; ++rep) {
        auto c = fixtures::random_correlation(rng, 4, 50);
        const auto base = vif_scores(c, c.names);
        c.r.row(1) *= -1.0;
        c.r.col(1) *= -1.0;
        const auto flipped = vif_scores(c, c.names);
        for (std::size_t j = 0; j < base.size(); ++j) {
            EXPECT_GE(base[j].vif, 1.0);
            EXPECT_NEAR(flipped[j].vif, base[j].vif, 1e-10);
        }
    }
}

TEST(Vif, OneWhenUncorrelatedWithOthers) {
    CorrelationMatrix c{{"a", "b", "c"}, Eigen::MatrixXd::Identity(3, 3), 30};
    c.r(1, 2) = c.r(2, 1) = 0.6;
    const auto v = vif_scores(c, {"a", "b", "c"});
    EXPECT_NEAR(v[0].vif, 1.0, 1e-15);
    EXPECT_GT(v[1].vif, 1.0);
}

TEST(Heteroscedasticity, HomoscedasticRarelyFlagged) {
    std::mt19937_64 rng(77);
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> u(0.5, 5.0);
    int flagged = 0;
    for (int rep = 0; rep < 100; ++rep) {
        Eigen::VectorXd fitted(100), res(100);
        for (int i = 0; i < 100; ++i) {
            fitted[i] = u(rng);
            res[i] = z(rng);
        }
        flagged += heteroscedasticity_check(res, fitted).flagged;
    }
    EXPECT_LE(flagged, 10);
}

TEST(Heteroscedasticity, ProportionalSpreadFlagged) {
    std::mt19937_64 rng(78);
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> u(0.5, 5.0);
    int flagged = 0;
    for (int rep = 0; rep < 100; ++rep) {
        Eigen::VectorXd fitted(100), res(100);
        for (int i = 0; i < 100; ++i) {
            fitted[i] = u(rng);
            res[i] = fitted[i] * z(rng);
        }
        flagged += heteroscedasticity_check(res, fitted).flagged;
    }
    EXPECT_GE(flagged, 90);
}

TEST(Heteroscedasticity, ZeroResiduals) {
    Eigen::VectorXd fitted(6);
    fitted << 1, 2, 3, 4, 5, 6;
    const auto r = heteroscedasticity_check(Eigen::VectorXd::Zero(6), fitted);
    EXPECT_EQ(r.lm, 0.0);
    EXPECT_FALSE(r.flagged);
}

TEST(Heteroscedasticity, ScaleInvariantAndNonNegative) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> z;
    Eigen::VectorXd fitted(40), res(40);
    for (int i = 0; i < 40; ++i) {
        fitted[i] = z(rng);
        res[i] = z(rng) * (1.0 + 0.3 * fitted[i] * fitted[i]);
    }
    const auto a = heteroscedasticity_check(res, fitted);
    const auto b = heteroscedasticity_check(res * 123.0, fitted);
    EXPECT_GE(a.lm, 0.0);
    EXPECT_NEAR(a.lm, b.lm, 1e-9);
    EXPECT_THROW(heteroscedasticity_check(res, Eigen::VectorXd::Constant(40, 1.0)), Error);
    EXPECT_THROW(heteroscedasticity_check(res.head(4), fitted.head(4)), Error);
}

TEST(ScreenReport, CleanDataPasses) {
    const auto d = generate_synthetic(fixtures::sample_corr(), 200, 31, false);
    const auto rep = screen_report(d, fixtures::initial_model());
    EXPECT_EQ(rep.outliers.size(), 200u);
    EXPECT_TRUE(rep.flagged_outliers().empty());
    EXPECT_TRUE(rep.normality_pass());
    EXPECT_TRUE(rep.vif_pass());
    EXPECT_EQ(rep.vif_equation, "Y");
    EXPECT_EQ(rep.vif.size(), 3u);
    ASSERT_TRUE(rep.heteroscedasticity.has_value());
    EXPECT_FALSE(rep.heteroscedasticity->flagged);
    EXPECT_TRUE(rep.all_pass());
    EXPECT_EQ(rep.ranges.size(), 4u);
    EXPECT_EQ(rep.linearity.size(), 6u);
}

TEST(ScreenReport, InjectedOutlierOnlyAffectsOutliers) {
    auto d = generate_synthetic(fixtures::sample_corr(), 200, 31, false);
    const auto before = screen_report(d, fixtures::initial_model());
    // a point that breaks the strong X1-X2 correlation without being extreme marginally
    d.values.row(17) << 3.0, -3.0, 0.0, 0.0;
    const auto after = screen_report(d, fixtures::initial_model());
    ASSERT_EQ(after.flagged_outliers().size(), 1u);
    EXPECT_EQ(after.flagged_outliers()[0].row, 17u);
    EXPECT_EQ(before.vif_pass(), after.vif_pass());
}

TEST(ScreenReport, UnknownVariable) {
    const auto d = generate_synthetic(fixtures::sample_corr(), 50, 1, false);
    auto g = fixtures::initial_model();
    g.variables.push_back("Z");
    g.edges.push_back({"X3", "Z"});
    try {
        screen_report(d, g);
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), ErrorCode::UnknownVariable);
    }
}
