#include <gtest/gtest.h>

#include <cmath>

#include <sparsecomp/completion.hpp>

using namespace sparsecomp;

namespace {

DenseMatrix ones(Index N, Index n) { return DenseMatrix(Eigen::MatrixXd::Ones(N, n)); }

}  // namespace

TEST(Observe, FullObservationWithoutNoiseIsExact) {
    const auto a = make_low_rank(6, 5, {2.0, 1.0}, 1);
    const auto obs = observe(a, 1.0, NoiseKind::none, 0.0, 4);
    EXPECT_EQ(obs.observed, a.eigen());
    EXPECT_EQ(obs.mask, Eigen::MatrixXd::Ones(6, 5));
}

TEST(Observe, RejectsBadParameters) {
    const auto a = ones(3, 3);
    EXPECT_THROW(observe(a, 0.0, NoiseKind::none, 0, 1), ContractError);
    EXPECT_THROW(observe(a, 1.2, NoiseKind::none, 0, 1), ContractError);
    EXPECT_THROW(observe(a, 0.5, NoiseKind::gaussian, -1, 1), ContractError);
}

TEST(Observe, MaskDensity) {
    const auto a = ones(100, 100);
    const double p = 0.5, band = 3.0 * std::sqrt(p * (1 - p) / 1e4);
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto obs = observe(a, p, NoiseKind::none, 0, s);
        EXPECT_NEAR(obs.mask.mean(), p, band);
        EXPECT_TRUE(((obs.mask.array() == 0) || (obs.mask.array() == 1)).all());
        EXPECT_TRUE(((obs.mask.array() == 1) || (obs.observed.array() == 0)).all());
    }
}

TEST(Observe, NoiseLaws) {
    const auto a = DenseMatrix(Eigen::MatrixXd::Zero(50, 50).array() + 0.25);
    const auto g = observe(a, 1.0, NoiseKind::gaussian, 0.3, 5);
    const double sd = std::sqrt(g.noise.array().square().mean());
    EXPECT_NEAR(sd, 0.3, 0.3 * 4 / std::sqrt(2 * 2500.0));
    const auto u = observe(a, 1.0, NoiseKind::bounded_uniform, 0.3, 5);
    EXPECT_LE(u.noise.cwiseAbs().maxCoeff(), 0.3);
    EXPECT_NEAR(u.noise.array().square().mean(), 0.09 / 3, 0.01);
}

TEST(Rescale, Unbiased) {
    const auto a = DenseMatrix::from_rows({{1, -2, 0.5}, {3, 0, 1}});
    const double p = 0.3;
    const int T = 100000;
    Eigen::ArrayXXd s = Eigen::ArrayXXd::Zero(2, 3), s2 = s;
    for (int t = 0; t < T; ++t) {
        const Eigen::ArrayXXd b = rescale(observe(a, p, NoiseKind::none, 0, derive_seed(3, t))).eigen().array();
        s += b;
        s2 += b.square();
    }
    const Eigen::ArrayXXd mean = s / T;
    const Eigen::ArrayXXd se = ((s2 / T - mean.square()) / T).sqrt();
    for (Index i = 0; i < 6; ++i) {
        EXPECT_LE(std::abs(mean.data()[i] - a.eigen().data()[i]), 3 * se.data()[i] + 1e-15) << i;
    }
}

TEST(Rescale, Trivial) {
    const auto a = DenseMatrix::from_rows({{1, 0}, {2, 4}});
    auto obs = observe(a, 1.0, NoiseKind::none, 0, 1);
    EXPECT_EQ(rescale(obs), a);
    obs.p = 0.5;
    EXPECT_EQ(rescale(obs), DenseMatrix::from_rows({{2, 0}, {4, 8}}));
}

TEST(Estimate, ExactRecovery) {
    const auto a = make_low_rank(20, 15, {5.0, 2.0, 1.0}, 8);
    const auto obs = observe(a, 1.0, NoiseKind::none, 0, 1);
    const auto est = estimate(obs, 3);
    EXPECT_LE(detail::spectral_norm(a.eigen() - est.eigen()), 1e-8 * a.eigen().norm());
    const auto full = estimate(obs, 15);
    EXPECT_LE((full.eigen() - a.eigen()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_THROW(estimate(obs, 0), ContractError);
    EXPECT_THROW(estimate(obs, 16), ContractError);
}

TEST(Estimate, RankAtMostJ) {
    const auto a = make_low_rank(12, 10, {5.0, 2.0}, 3);
    const auto est = estimate(observe(a, 0.5, NoiseKind::gaussian, 0.1, 9), 2);
    EXPECT_LE(svd(est).numericalRank, 2);
}

TEST(Estimate, NoisyRankTwoBelowFullRecoveryPredictor) {
    const auto a = make_low_rank(60, 60, {48.0, 36.0}, 12);
    const auto f = svd(a);
    const auto pred = completion_predictors(a, f, 0.9, 0.01);
    int below = 0;
    for (std::uint64_t t = 0; t < 200; ++t) {
        const auto est = estimate(observe(a, 0.9, NoiseKind::gaussian, 0.01, derive_seed(44, t)), 2);
        const double rel = detail::spectral_norm(a.eigen() - est.eigen()) / f.sigma(0);
        if (rel <= pred.fullRecoveryBound) ++below;
    }
    EXPECT_GE(below, 180);
}

TEST(ColumnError, Examples) {
    const auto a = make_low_rank(6, 4, {1.0}, 2);
    EXPECT_EQ(column_estimate_error(a, a, 2), 0.0);
    Eigen::MatrixXd b = a.eigen();
    b(0, 3) += 0.75;
    EXPECT_NEAR(column_estimate_error(a, DenseMatrix(b), 3), 0.75, 1e-15);
    EXPECT_THROW(column_estimate_error(a, a, 4), ContractError);
}

TEST(Decomposition, IdentityAndEntryBound) {
    const auto a = make_low_rank(15, 12, {3.0, 1.0}, 6);
    const double amax = a.eigen().cwiseAbs().maxCoeff();
    for (double p : {0.1, 0.37, 0.5, 1.0})
        for (auto kind : {NoiseKind::none, NoiseKind::gaussian, NoiseKind::bounded_uniform}) {
            const auto obs = observe(a, p, kind, 0.2, 11);
            const auto d = decompose(a, obs);
            EXPECT_LE(decomposition_residual_ulps(a, obs, d), 8.0);
            EXPECT_LE(d.E.cwiseAbs().maxCoeff(), amax / p * (1 + 1e-15));
            if (kind == NoiseKind::none) {
                EXPECT_EQ(d.F.cwiseAbs().maxCoeff(), 0.0);
            }
        }
}

TEST(CompletionPredictors, MathcalBHandValue) {
    const auto c = completion_predictors(ones(100, 100), 0.5, 0.1);
    EXPECT_NEAR(c.mathcalB, 20.434067676309645, 1e-12);
    EXPECT_DOUBLE_EQ(c.rho1, 2);
    EXPECT_DOUBLE_EQ(c.L1, 2);
    EXPECT_NEAR(c.rho2, 0.02, 1e-15);
    EXPECT_NEAR(c.T1, std::sqrt(2.0) + 2.0 / 3.0, 1e-15);
}

TEST(CompletionPredictors, NoiselessLimitAndScaling) {
    const auto a = make_low_rank(30, 20, {4.0, 2.0}, 2);
    const double amax = a.eigen().cwiseAbs().maxCoeff();
    const auto c1 = completion_predictors(a, 1.0, 0.0);
    EXPECT_EQ(c1.rho2, 0.0);
    EXPECT_NEAR(c1.mathcalB, std::sqrt(30.0) * amax + amax * std::sqrt(std::log(30.0)), 1e-12);
    const auto ca = completion_predictors(a, 0.8, 0.2);
    const auto cb = completion_predictors(a, 0.4, 0.2);
    EXPECT_NEAR(cb.rho1 / ca.rho1, 2, 1e-12);
    EXPECT_NEAR(cb.L1 / ca.L1, 2, 1e-12);
    EXPECT_NEAR(cb.rho2 / ca.rho2, 2, 1e-12);
}

TEST(CompletionPredictors, ShapesAndTruncation) {
    const auto a = make_low_rank(40, 40, {10.0, 9.0, 1.0}, 7);
    const auto f = svd(a);
    const auto c = completion_predictors(a, f, 0.5, 0.1, 0.1);
    ASSERT_EQ(c.truncatedBound.size(), 3u);
    const double r15 = std::pow(3.0, 1.5), s1 = f.sigma(0);
    for (Index j = 1; j <= 3; ++j) {
        const double expect = r15 * s1 / spectral_gap(f, j) + std::sqrt(40.0) * s1 / f.sigma(j - 1);
        EXPECT_NEAR(c.truncatedBound[j - 1], expect, 1e-12 * expect);
        const double tail = j < 3 ? f.sigma(j) : 0.0;
        EXPECT_NEAR(c.truncatedPlusTail[j - 1], expect + tail, 1e-12 * expect);
    }
    Index best = 1;
    for (Index j = 2; j <= 3; ++j)
        if (c.truncatedPlusTail[j - 1] < c.truncatedPlusTail[best - 1]) best = j;
    EXPECT_EQ(c.bestTruncation, best);
    EXPECT_NEAR(c.fullRecoveryBound, (r15 + std::sqrt(40.0)) * s1 / f.sigma(2), 1e-12 * c.fullRecoveryBound);
    EXPECT_EQ(c.columnBound.size(), 40u);
    const auto j = completion_report(c);
    EXPECT_TRUE(j.at("shapeOnly").get<bool>());
    EXPECT_TRUE(j.at("predictors").contains("subspace_3"));
}
