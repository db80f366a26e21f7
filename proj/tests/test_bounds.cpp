#include <gtest/gtest.h>

#include <cmath>

#include <sparsecomp/bounds.hpp>

using namespace sparsecomp;

namespace {

DenseMatrix ones(Index N, Index n) { return DenseMatrix(Eigen::MatrixXd::Ones(N, n)); }

}  // namespace

TEST(TroppRadius, AllOnes) {
    EXPECT_NEAR(tropp_radius(ones(4, 4), 8), 4.078667960675236, 1e-12);
    EXPECT_NEAR(tropp_radius(ones(4, 4), 32), 4.078667960675236 / 2, 1e-12);
    EXPECT_THROW(tropp_radius(ones(2, 3), 8), ContractError);
    EXPECT_THROW(tropp_radius(ones(3, 2), 0), ContractError);
}

TEST(TroppRadius, Eps1LowerBound) {
    const auto a = make_low_rank(20, 12, {5.0, 3.0, 1.0}, 4);
    const auto f = svd(a);
    const double m = 300;
    EXPECT_GE(weyl_rel_bound(a, f, 1, m), std::sqrt(20 * std::log(40.0) / m));
    const auto r1 = make_low_rank(20, 12, {2.0}, 4);
    EXPECT_NEAR(weyl_rel_bound(r1, svd(r1), 1, m), std::sqrt(20 * std::log(40.0) / m), 1e-12);
}

TEST(WeylRelBound, RatioOfSigmas) {
    const auto a = DenseMatrix::from_rows({{3, 0}, {0, 4}});
    const auto f = svd(a);
    EXPECT_NEAR(weyl_rel_bound(a, f, 2, 5) / weyl_rel_bound(a, f, 1, 5), 4.0 / 3.0, 1e-12);
    EXPECT_THROW(weyl_rel_bound(a, f, 3, 5), ContractError);
}

TEST(R0Threshold, Examples) {
    // 1/4 ln(1024 ln 1024 / 64)
    EXPECT_NEAR(r0_threshold(1024, 4096), 1.1771652236630405, 1e-12);
    EXPECT_LT(r0_threshold(1024, 8192), r0_threshold(1024, 4096));
    const double nl = 100 * std::log(100.0);
    EXPECT_NEAR(r0_threshold(100, nl * nl), 0.0, 1e-12);
    EXPECT_THROW(r0_threshold(2, 10), ContractError);
    EXPECT_THROW(r0_threshold(10, 0.5), ContractError);
}

TEST(NewSvRelBound, Examples) {
    EXPECT_NEAR(new_sv_rel_bound(1, 0.1), 0.01, 1e-15);
    EXPECT_NEAR(new_sv_rel_bound(4, 0.1), 0.02, 1e-15);
    const auto a = make_low_rank(30, 30, {1.0}, 2);
    const auto f = svd(a);
    const auto p1 = sparsify_predictors(a, f, 100);
    const auto p4 = sparsify_predictors(a, f, 400);
    EXPECT_NEAR(p4.newSvRel[0].value / p1.newSvRel[0].value, 0.25, 1e-12);
    EXPECT_NEAR(p4.weylRel[0].value / p1.weylRel[0].value, 0.5, 1e-12);
}

TEST(WedinBound, Examples) {
    EXPECT_DOUBLE_EQ(wedin_bound(0.5, 2).value, 0.5);
    EXPECT_EQ(wedin_bound(0, 0).value, 0.0);
    const auto inf = wedin_bound(0.1, 0);
    EXPECT_TRUE(std::isinf(inf.value));
    EXPECT_TRUE(inf.vacuous);
    EXPECT_EQ(inf.capped, 1.0);
    const auto big = wedin_bound(3, 2);
    EXPECT_DOUBLE_EQ(big.value, 3);
    EXPECT_DOUBLE_EQ(big.capped, 1);
    EXPECT_TRUE(big.vacuous);
}

TEST(NewSubspaceBound, Examples) {
    EXPECT_NEAR(new_subspace_bound(1, 1, 1, 10, 10).value, 0.21, 1e-15);
    EXPECT_NEAR(new_subspace_bound(4, 5, 0, 10, 2).value, 2.0 * 5.0 / 2.0, 1e-15);
    EXPECT_TRUE(std::isinf(new_subspace_bound(1, 1, 1, 10, 0).value));
    // R >> delta but R << sqrt(delta sigma): much smaller than Wedin with ||E|| = R
    const double sigma = 1e6, delta = 100, R = 20;
    EXPECT_LT(new_subspace_bound(1, 1, R, sigma, delta).value, 0.1 * wedin_bound(R, delta).value);
}

TEST(HParam, HandEvaluation) {
    // delta = 1 and cs = 1 with N = n = m: a single nonzero entry has both
    const Index N = 64;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(N, N);
    m(0, 0) = 1.0;
    const DenseMatrix a(m);
    const auto f = svd(a);
    const auto h = h_param(a, f, static_cast<double>(N));
    EXPECT_NEAR(h.delta, 1.0, 1e-15);
    // cs of a single nonzero is 1/N, so the second term carries that factor
    const double logN = std::log(64.0);
    EXPECT_NEAR(h.h, std::sqrt(1 / (N * logN)) + (1.0 / N) * std::sqrt(1 / logN), 1e-12);
}

TEST(HParam, FormulaWithUnitDeltaAndCs) {
    // the hand formula for delta = cs = 1, r = 1, N = n = m = 64
    const double N = 64, logN = std::log(N);
    EXPECT_NEAR(std::sqrt(1 / (N * logN)) + std::sqrt(1 / logN), 0.5516506912780186, 1e-15);
}

TEST(HParam, LinearInRank) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(8, 8);
    m(0, 0) = 1;
    m(1, 1) = 0.5;
    const DenseMatrix a(m);
    const auto h = h_param(a, svd(a), 8);
    EXPECT_EQ(h.r, 2);
    EXPECT_NEAR(h.delta, 1.0, 1e-15);
    const double perRank = std::sqrt(1 / (8 * std::log(8.0))) + h.cs * std::sqrt(8 / (8 * std::log(8.0)));
    EXPECT_NEAR(h.h, 2 * perRank, 1e-12);
}

TEST(HParam, DelocalizedVectorsShrinkSecondTerm) {
    const auto a = ones(16, 16);
    const auto h = h_param(a, svd(a), 16);
    EXPECT_NEAR(h.delta, 0.25, 1e-12);
    EXPECT_NEAR(h.cs, 1.0, 1e-12);
    const double logN = std::log(16.0);
    EXPECT_NEAR(h.h, std::sqrt(1 / (16 * logN)) + (1.0 / 16) * std::sqrt(1 / logN), 1e-12);
}

TEST(NormTail, AllOnes) {
    const auto t = norm_tail_bound(ones(4, 4), 16, 0);
    EXPECT_NEAR(t.firstTerm, 8.0, 1e-12);
    EXPECT_NEAR(t.secondTerm, std::sqrt(std::log(4.0)), 1e-12);
    EXPECT_NEAR(t.total, 9.177410022515474, 1e-12);
    EXPECT_NEAR(t.csForm, t.total, 1e-12 * t.total);
    EXPECT_DOUBLE_EQ(t.failureProbability, 1.0);
    EXPECT_NEAR(norm_tail_bound(ones(4, 4), 16, 2 * std::log(4.0)).failureProbability, 1.0 / 16, 1e-15);
    EXPECT_LT(norm_tail_bound(ones(4, 4), 1e12, 0).total, 1e-4);
}

TEST(NormTail, CsFormAgreesOnSquareMatrices) {
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto a = make_low_rank(12, 12, {3.0, 2.0, 0.5}, s);
        const auto t = norm_tail_bound(a, 50 + 10 * s, 1.5);
        EXPECT_NEAR(t.csForm, t.total, 1e-12 * t.total);
    }
    const auto tall = make_low_rank(20, 5, {1.0}, 1);
    const auto t = norm_tail_bound(tall, 30, 0);
    EXPECT_GT(t.csForm, t.total);
}

TEST(GeneralBound, Examples) {
    auto g = general_bound({0, 0, 1, 1, 10, 10, 10});
    EXPECT_DOUBLE_EQ(g.svLower, 10);
    EXPECT_DOUBLE_EQ(g.svUpper, 10);
    EXPECT_DOUBLE_EQ(g.subspace.value, 0.1);
    g = general_bound({0.1, 1, 1, 1, 10, 10, 10});
    EXPECT_NEAR(g.svLower, 9.9, 1e-12);
    EXPECT_NEAR(g.svUpper, 10.21, 1e-12);
    EXPECT_NEAR(g.subspace.value, 0.21, 1e-15);
    EXPECT_EQ(general_bound({0.3, 2.5, 2, 3, 7, 6, 1.5}).subspace.value, new_subspace_bound(2, 3, 2.5, 7, 1.5).value);
    EXPECT_TRUE(std::isinf(general_bound({0, 1, 1, 1, 10, 10, 0}).subspace.value));
    EXPECT_THROW(general_bound({0, 1, 1, 1, 10, 0, 1}), ContractError);
}

TEST(BilinearT, Examples) {
    EXPECT_DOUBLE_EQ(bilinear_T(4, 3, 1), 3);
    EXPECT_DOUBLE_EQ(bilinear_T(4, 0, 0.3), 2);
    EXPECT_DOUBLE_EQ(bilinear_T(0, 3, 0.5), 0.25);
    EXPECT_THROW(bilinear_T(-1, 0), ContractError);
}

TEST(Tails, BernsteinAndBilinear) {
    EXPECT_NEAR(bilinear_tail(10), 2 * std::exp(-5.0), 1e-15);
    EXPECT_EQ(bilinear_tail(0.5), 1.0);
    EXPECT_NEAR(bernstein_tail(3, 1, 0), 2 * std::exp(-4.5), 1e-15);
    EXPECT_EQ(bernstein_tail(0, 0, 0), 1.0);
    EXPECT_EQ(bernstein_tail(1, 0, 0), 0.0);
}

TEST(SparsifyPredictors, ConsistentFields) {
    const auto a = make_low_rank(40, 30, {6.0, 3.0}, 9);
    const auto f = svd(a);
    const auto p = sparsify_predictors(a, f, 2000);
    ASSERT_EQ(p.eps.size(), 2u);
    EXPECT_NEAR(p.eps[0], p.R / 6.0, 1e-12);
    EXPECT_NEAR(p.eps[1], p.R / 3.0, 1e-12);
    EXPECT_NEAR(p.eps1Squared, p.eps[0] * p.eps[0], 1e-15);
    EXPECT_NEAR(p.hEps1, p.h.h * p.eps[0], 1e-15);
    EXPECT_EQ(p.feasible, 2000 <= p.feasibleMMax);
    EXPECT_NEAR(p.normTail.failureProbability, 1.0 / (40.0 * 40.0), 1e-15);
    EXPECT_NEAR(p.wedin[0].value, 2 * p.R / 3.0, 1e-12);
    EXPECT_NEAR(p.wedin[1].value, 2 * p.R / 3.0, 1e-12);

    const auto j = bound_report(p);
    EXPECT_EQ(j.at("side"), "sparsify");
    EXPECT_TRUE(j.at("shapeOnly").get<bool>());
    EXPECT_TRUE(j.at("predictors").contains("newSubspace_2"));
    EXPECT_TRUE(j.at("regimeFlags").contains("lowRank"));
}

TEST(SparsifyPredictors, VacuousFlagOnZeroGap) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(6, 6);
    m(0, 0) = 2;
    m(1, 1) = 2;
    const DenseMatrix a(m);
    const auto p = sparsify_predictors(a, svd(a), 10);
    EXPECT_TRUE(p.wedin[0].vacuous);
    EXPECT_TRUE(std::isinf(p.newSubspace[0].value));
    const auto j = bound_report(p);
    EXPECT_EQ(j["predictors"]["wedin_1"]["value"], "inf");
    EXPECT_TRUE(j["predictors"]["wedin_1"]["vacuous"].get<bool>());
}
