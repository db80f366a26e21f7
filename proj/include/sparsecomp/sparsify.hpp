#ifndef SPARSECOMP_SPARSIFY_HPP
#define SPARSECOMP_SPARSIFY_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "matcore.hpp"
#include "rng.hpp"

namespace sparsecomp {

/// Hybrid l2/l1 sampling distribution
///   p_ij = (a_ij^2 / ||A||_2^2 + |a_ij| / ||A||_1) / 2.
/// Zero exactly where a_ij = 0, positive elsewhere, sums to one.
struct SampleDistribution {
    Eigen::MatrixXd probs;

    Index rows() const noexcept { return probs.rows(); }
    Index cols() const noexcept { return probs.cols(); }
};

enum class SampleMethod { replacement, bernoulli };

/// strict: m * p_ij > 1 anywhere is an error. clamp: keep probabilities
/// are capped at one (those entries are kept deterministically) and the
/// outcome carries a warning count.
enum class ClampPolicy { strict, clamp };

inline const char* to_string(SampleMethod m) {
    return m == SampleMethod::replacement ? "replacement" : "bernoulli";
}

inline const char* to_string(ClampPolicy p) { return p == ClampPolicy::strict ? "strict" : "clamp"; }

struct SparsifyOutcome {
    DenseMatrix result;
    Eigen::MatrixXd error;          // result - A
    std::size_t nnz = 0;
    Eigen::MatrixXi multiplicities;  // replacement sampling only; empty otherwise
    SampleMethod method = SampleMethod::bernoulli;
    double m = 0;
    std::uint64_t seed = 0;
    std::size_t clampedEntries = 0;  // entries whose keep probability was capped

    bool clamp_warning() const noexcept { return clampedEntries > 0; }
};

/// Entrywise variance and magnitude bounds for E = S~(A) - A:
///   Var(E_ij) <= rho = (2/m) ||A||_2^2,   |E_ij| <= L = (2/m) ||A||_1.
struct EntryBounds {
    double rho = 0;
    double L = 0;
};

inline SampleDistribution sample_probs(const DenseMatrix& a) {
    const auto& m = a.eigen();
    const double l2sq = m.squaredNorm();
    const double l1 = m.cwiseAbs().sum();
    if (!(l1 > 0)) throw ContractError("sample_probs: matrix is zero");
    SampleDistribution d{0.5 * (m.array().square() / l2sq + m.array().abs() / l1).matrix()};
    return d;
}

/// Largest budget for which every m p_ij <= 1:
///   min(||A||_2^2 / ||A||_max^2, ||A||_1 / ||A||_max).
inline double feasible_m_max(const DenseMatrix& a) {
    const auto& m = a.eigen();
    const double mx = m.cwiseAbs().maxCoeff();
    if (!(mx > 0)) throw ContractError("feasible_m_max: matrix is zero");
    return std::min(m.squaredNorm() / (mx * mx), m.cwiseAbs().sum() / mx);
}

inline EntryBounds entry_variance_bounds(const DenseMatrix& a, double m) {
    if (!(m > 0)) throw ContractError("entry_variance_bounds: m must be positive");
    return {2.0 / m * a.eigen().squaredNorm(), 2.0 / m * a.eigen().cwiseAbs().sum()};
}

/// Draws m positions i.i.d. from p (inverse CDF over the row-major
/// flattening) and returns S(A) = (1/m) sum_i B_i, B_i holding the single
/// entry a_ij / p_ij.
inline SparsifyOutcome sparsify_replacement(const DenseMatrix& a, std::int64_t m, std::uint64_t seed) {
    if (m < 1) throw ContractError("sparsify_replacement: m must be >= 1");
    const auto dist = sample_probs(a);
    const Index N = a.rows(), n = a.cols();

    std::vector<double> cdf(static_cast<std::size_t>(N * n));
    double acc = 0;
    for (Index i = 0; i < N; ++i)
        for (Index j = 0; j < n; ++j) {
            acc += dist.probs(i, j);
            cdf[static_cast<std::size_t>(i * n + j)] = acc;
        }

    Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(N, n);
    Rng rng(seed);
    for (std::int64_t k = 0; k < m; ++k) {
        const double u = rng.uniform() * acc;
        auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        auto flat = static_cast<Index>(std::min<std::ptrdiff_t>(it - cdf.begin(), N * n - 1));
        // u * acc may round up to acc; step back over trailing zero-probability slots
        while (dist.probs(flat / n, flat % n) == 0.0 && flat > 0) --flat;
        ++counts(flat / n, flat % n);
    }

    Eigen::MatrixXd result = Eigen::MatrixXd::Zero(N, n);
    std::size_t nnz = 0;
    const double md = static_cast<double>(m);
    for (Index i = 0; i < N; ++i)
        for (Index j = 0; j < n; ++j)
            if (counts(i, j) > 0) {
                result(i, j) = (counts(i, j) / md) * (a(i, j) / dist.probs(i, j));
                ++nnz;
            }

    SparsifyOutcome out{DenseMatrix(result), result - a.eigen(), nnz, std::move(counts),
                        SampleMethod::replacement, md, seed, 0};
    return out;
}

/// Keeps entry ij independently with probability m p_ij and rescales it to
/// a_ij / (m p_ij). One uniform is consumed per entry in row-major order,
/// whatever its keep probability.
inline SparsifyOutcome sparsify_bernoulli(const DenseMatrix& a, double m, std::uint64_t seed,
                                          ClampPolicy policy = ClampPolicy::strict) {
    if (!(m > 0) || !std::isfinite(m)) throw ContractError("sparsify_bernoulli: m must be positive");
    const auto dist = sample_probs(a);
    const Index N = a.rows(), n = a.cols();
    // m = feasible_m_max can land a hair above one after rounding
    constexpr double kRoundingSlack = 1e-12;

    Eigen::MatrixXd keep = m * dist.probs;
    std::size_t clamped = 0;
    for (Index i = 0; i < N; ++i)
        for (Index j = 0; j < n; ++j) {
            double& q = keep(i, j);
            if (q <= 1.0) continue;
            if (q <= 1.0 + kRoundingSlack) {
                q = 1.0;
            } else if (policy == ClampPolicy::strict) {
                throw FeasibilityError(static_cast<std::size_t>(i), static_cast<std::size_t>(j), q);
            } else {
                q = 1.0;
                ++clamped;
            }
        }

    Rng rng(seed);
    Eigen::MatrixXd result = Eigen::MatrixXd::Zero(N, n);
    std::size_t nnz = 0;
    for (Index i = 0; i < N; ++i)
        for (Index j = 0; j < n; ++j) {
            const double u = rng.uniform();
            if (u < keep(i, j)) {
                result(i, j) = keep(i, j) == 1.0 ? a(i, j) : a(i, j) / keep(i, j);
                ++nnz;
            }
        }

    SparsifyOutcome out{DenseMatrix(result), result - a.eigen(), nnz, Eigen::MatrixXi(),
                        SampleMethod::bernoulli, m, seed, clamped};
    return out;
}

/// Pathwise check |E_ij| <= (2/m) ||A||_1 on a Bernoulli outcome. Returns
/// the worst ratio |E_ij| / L (<= 1 when the bound holds).
inline double entry_bound_ratio(const DenseMatrix& a, const SparsifyOutcome& o) {
    const double L = entry_variance_bounds(a, o.m).L;
    return o.error.cwiseAbs().maxCoeff() / L;
}

}  // namespace sparsecomp

#endif  // SPARSECOMP_SPARSIFY_HPP
