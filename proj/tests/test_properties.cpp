// Randomized invariants over many generated matrices.

#include <gtest/gtest.h>

#include <cmath>

#include <sparsecomp/sparsecomp.hpp>

using namespace sparsecomp;

namespace {

struct Shape {
    Index N, n;
    std::vector<double> spectrum;
};

Shape random_shape(Rng& rng) {
    const Index n = 2 + static_cast<Index>(rng.uniform() * 14);
    const Index N = n + static_cast<Index>(rng.uniform() * 10);
    const Index r = 1 + static_cast<Index>(rng.uniform() * std::min<Index>(n, 4));
    std::vector<double> s;
    double v = 1.0 + 9.0 * rng.uniform();
    for (Index i = 0; i < r; ++i) {
        s.push_back(v);
        v *= 0.2 + 0.7 * rng.uniform();
    }
    return {N, n, s};
}

}  // namespace

TEST(Property, NormInequalities) {
    Rng rng(1);
    for (int k = 0; k < 200; ++k) {
        const auto s = random_shape(rng);
        const auto a = make_low_rank(s.N, s.n, s.spectrum, k);
        const auto ns = norms(a);
        const double tol = 1e-12 * ns.l2;
        EXPECT_LE(ns.max, ns.spectral + tol);
        EXPECT_LE(ns.spectral, ns.l2 + tol);
        EXPECT_LE(ns.l2, std::sqrt(static_cast<double>(s.spectrum.size())) * ns.spectral + tol);
        EXPECT_LE(ns.l2 * ns.l2, ns.l1 * ns.max * (1 + 1e-12));
        EXPECT_GT(ns.cs, 0.0);
        EXPECT_LE(ns.cs, 1.0 + 1e-12);
    }
}

TEST(Property, SampleProbsAreADistribution) {
    Rng rng(2);
    for (int k = 0; k < 200; ++k) {
        const auto s = random_shape(rng);
        const auto a = make_low_rank(s.N, s.n, s.spectrum, k);
        const auto d = sample_probs(a);
        EXPECT_NEAR(d.probs.sum(), 1.0, 1e-12);
        EXPECT_GE(d.probs.minCoeff(), 0.0);
        const double mmax = feasible_m_max(a);
        EXPECT_LE(mmax * d.probs.maxCoeff(), 1.0 + 1e-12);
    }
}

TEST(Property, SinAngleSymmetricAndBasisInvariant) {
    Rng rng(3);
    for (int k = 0; k < 100; ++k) {
        const Index N = 5 + k % 20, j = 1 + k % 4;
        const Subspace u{haar_orthonormal(N, j, rng)};
        const Subspace w{haar_orthonormal(N, j, rng)};
        const double s = sin_angle(u, w);
        EXPECT_NEAR(s, sin_angle(w, u), 1e-9);
        EXPECT_GE(s, 0.0);
        EXPECT_LE(s, 1.0 + 1e-12);
        const Eigen::MatrixXd q = haar_orthonormal(j, j, rng);
        EXPECT_NEAR(s, sin_angle(Subspace(u.basis() * q), w), 1e-9);
        EXPECT_NEAR(sin_angle(u, Subspace(u.basis() * q)), 0.0, 1e-7);
    }
}

TEST(Property, WeylOnRandomPairs) {
    Rng rng(4);
    for (int k = 0; k < 100; ++k) {
        const auto s = random_shape(rng);
        const Eigen::MatrixXd a = make_low_rank(s.N, s.n, s.spectrum, k).eigen();
        Eigen::MatrixXd e(s.N, s.n);
        for (Index i = 0; i < e.size(); ++i) e.data()[i] = 0.3 * rng.normal();
        const Eigen::VectorXd sa = detail::singular_values(a);
        const Eigen::VectorXd sb = detail::singular_values(a + e);
        const double ne = detail::spectral_norm(e);
        for (Index i = 0; i < sa.size(); ++i) EXPECT_LE(std::abs(sa(i) - sb(i)), ne * (1 + 1e-10) + 1e-12);
    }
}

TEST(Property, PredictorsShrinkWithBudget) {
    Rng rng(5);
    for (int k = 0; k < 50; ++k) {
        const auto s = random_shape(rng);
        const auto a = make_low_rank(s.N, s.n, s.spectrum, k);
        const auto f = svd(a);
        double prevR = kInf, prevEps = kInf, prevRho = kInf;
        for (double m : {10.0, 40.0, 160.0, 640.0, 2560.0}) {
            const auto p = sparsify_predictors(a, f, m);
            EXPECT_LT(p.R, prevR);
            EXPECT_LT(p.eps.front(), prevEps);
            EXPECT_LT(p.entry.rho, prevRho);
            prevR = p.R;
            prevEps = p.eps.front();
            prevRho = p.entry.rho;
            for (std::size_t j = 0; j < p.eps.size(); ++j) {
                if (p.eps[j] <= 1.0) {
                    EXPECT_LE(p.newSvRel[j].value, std::sqrt(j + 1.0) * p.eps[j] + 1e-15);
                }
            }
        }
    }
}

TEST(Property, HFloorAndBudgetMonotone) {
    Rng rng(6);
    for (int k = 0; k < 50; ++k) {
        const auto s = random_shape(rng);
        const auto a = make_low_rank(s.N, s.n, s.spectrum, k);
        const auto f = svd(a);
        const double N = static_cast<double>(s.N);
        double prev = kInf;
        for (double m : {10.0, 100.0, 1000.0}) {
            const auto h = h_param(a, f, m);
            EXPECT_GE(h.h, h.r * std::sqrt(1.0 / (N * std::log(N))) * (1 - 1e-12));
            EXPECT_LT(h.h, prev);
            EXPECT_GE(h.delta * h.delta * h.r, 1.0 / N * (1 - 1e-9));
            prev = h.h;
        }
    }
}

TEST(Property, NormTailFormsAgreeForSquare) {
    Rng rng(7);
    for (int k = 0; k < 50; ++k) {
        const auto s = random_shape(rng);
        const auto sq = make_low_rank(s.n, s.n, s.spectrum, k);
        const auto t = norm_tail_bound(sq, 50.0, 1.0);
        EXPECT_NEAR(t.total, t.csForm, 1e-12 * t.total);
        const auto tall = make_low_rank(s.n + 5, s.n, s.spectrum, k);
        const auto u = norm_tail_bound(tall, 50.0, 1.0);
        EXPECT_GE(u.csForm, u.total * (1 - 1e-12));
    }
}

TEST(Property, SparsifiersRespectInvariants) {
    Rng rng(8);
    for (int k = 0; k < 100; ++k) {
        const auto s = random_shape(rng);
        const auto a = make_low_rank(s.N, s.n, s.spectrum, k);
        const double m = 0.8 * feasible_m_max(a);
        const auto b = sparsify_bernoulli(a, m, derive_seed(9, k));
        EXPECT_EQ(b.clampedEntries, 0u);
        EXPECT_LE(entry_bound_ratio(a, b), 1.0 + 1e-12);
        EXPECT_EQ(b.error, b.result.eigen() - a.eigen());
        const auto rp = sparsify_replacement(a, std::max<std::int64_t>(1, static_cast<std::int64_t>(m)),
                                             derive_seed(10, k));
        EXPECT_LE(static_cast<std::int64_t>(rp.multiplicities.sum()), static_cast<std::int64_t>(std::max(1.0, m)));
    }
}
