#ifndef SPARSECOMP_MATCORE_HPP
#define SPARSECOMP_MATCORE_HPP

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "rng.hpp"

namespace sparsecomp {

using Index = Eigen::Index;

/// Real N x n matrix with finite entries. Thin wrapper over Eigen that
/// enforces the shape and finiteness invariants at construction; all
/// arithmetic happens on the underlying Eigen::MatrixXd.
class DenseMatrix {
public:
    explicit DenseMatrix(Eigen::MatrixXd data) : data_(std::move(data)) {
        if (data_.rows() < 1 || data_.cols() < 1) {
            throw ContractError("DenseMatrix: dimensions must be positive, got " +
                                std::to_string(data_.rows()) + "x" + std::to_string(data_.cols()));
        }
        if (!data_.allFinite()) throw ContractError("DenseMatrix: non-finite entry");
    }

    DenseMatrix(Index rows, Index cols) : DenseMatrix(Eigen::MatrixXd::Zero(rows, cols)) {}

    static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
        const auto N = static_cast<Index>(rows.size());
        const auto n = N ? static_cast<Index>(rows.begin()->size()) : 0;
        Eigen::MatrixXd m(N, n);
        Index i = 0;
        for (const auto& row : rows) {
            if (static_cast<Index>(row.size()) != n) throw ContractError("from_rows: ragged rows");
            Index j = 0;
            for (double v : row) m(i, j++) = v;
            ++i;
        }
        return DenseMatrix(std::move(m));
    }

    Index rows() const noexcept { return data_.rows(); }
    Index cols() const noexcept { return data_.cols(); }
    double operator()(Index i, Index j) const { return data_(i, j); }
    const Eigen::MatrixXd& eigen() const noexcept { return data_; }

    bool operator==(const DenseMatrix& o) const {
        return rows() == o.rows() && cols() == o.cols() && data_ == o.data_;
    }

private:
    Eigen::MatrixXd data_;
};

/// Entrywise and spectral norms of a matrix, plus its Cauchy-Schwartz
/// constant cs = l1 / (sqrt(N n) l2), which is 0 for the zero matrix.
struct NormSummary {
    double l1 = 0;
    double l2 = 0;
    double max = 0;
    double spectral = 0;
    double cs = 0;
};

struct SvdFactors {
    Eigen::MatrixXd U;      // N x k
    Eigen::VectorXd sigma;  // descending
    Eigen::MatrixXd V;      // n x k
    Index numericalRank = 0;

    Index size() const noexcept { return sigma.size(); }
};

/// Orthonormal basis of a subspace of R^ambient.
class Subspace {
public:
    explicit Subspace(Eigen::MatrixXd basis, double tol = 1e-10) : basis_(std::move(basis)) {
        if (basis_.cols() < 1 || basis_.rows() < basis_.cols()) {
            throw ContractError("Subspace: basis must be d x k with 1 <= k <= d");
        }
        const Eigen::MatrixXd gram = basis_.transpose() * basis_;
        const double dev = (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols()))
                               .cwiseAbs()
                               .maxCoeff();
        if (!(dev <= tol)) {
            throw ContractError("Subspace: basis columns are not orthonormal (deviation " +
                                std::to_string(dev) + ")");
        }
    }

    const Eigen::MatrixXd& basis() const noexcept { return basis_; }
    Index dim() const noexcept { return basis_.cols(); }
    Index ambient_dim() const noexcept { return basis_.rows(); }

private:
    Eigen::MatrixXd basis_;
};

inline double default_rank_tol(Index rows, Index cols) {
    return 1e-10 * static_cast<double>(std::max(rows, cols));
}

namespace detail {

struct RawSvd {
    Eigen::MatrixXd U;
    Eigen::VectorXd sigma;
    Eigen::MatrixXd V;
};

// Eigen 3.4.0's BDCSVD occasionally returns NaN on very sparse inputs
// (a few dozen nonzeros in 64 x 64); JacobiSVD is slower but reliable.
inline RawSvd raw_svd(const Eigen::MatrixXd& m, bool vectors) {
    const unsigned opts = vectors ? (Eigen::ComputeThinU | Eigen::ComputeThinV) : 0u;
    auto ok = [&](const auto& solver) {
        return solver.info() == Eigen::Success && solver.singularValues().allFinite() &&
               (!vectors || (solver.matrixU().allFinite() && solver.matrixV().allFinite()));
    };
    {
        Eigen::BDCSVD<Eigen::MatrixXd> solver(m, opts);
        if (ok(solver)) {
            if (!vectors) return {{}, solver.singularValues(), {}};
            return {solver.matrixU(), solver.singularValues(), solver.matrixV()};
        }
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> solver(m, opts);
    if (solver.info() != Eigen::Success) throw NumericalError("SVD failed to converge");
    if (!ok(solver)) throw NumericalError("SVD produced non-finite output");
    if (!vectors) return {{}, solver.singularValues(), {}};
    return {solver.matrixU(), solver.singularValues(), solver.matrixV()};
}

inline double spectral_norm(const Eigen::MatrixXd& m) {
    if (m.size() == 0) return 0.0;
    const auto s = raw_svd(m, false).sigma;
    return s.size() ? s(0) : 0.0;
}

inline Eigen::VectorXd singular_values(const Eigen::MatrixXd& m) { return raw_svd(m, false).sigma; }

}  // namespace detail

inline NormSummary norms(const DenseMatrix& a) {
    const auto& m = a.eigen();
    NormSummary s;
    s.l1 = m.cwiseAbs().sum();
    s.l2 = m.norm();
    s.max = m.cwiseAbs().maxCoeff();
    s.spectral = detail::spectral_norm(m);
    if (s.l2 > 0) {
        const double nn = static_cast<double>(a.rows()) * static_cast<double>(a.cols());
        s.cs = std::min(1.0, s.l1 / (std::sqrt(nn) * s.l2));
    }
    return s;
}

/// Thin SVD with k = min(N, n). Singular vectors are sign-canonicalized:
/// the largest-magnitude entry of each column of U (lowest row on ties) is
/// nonnegative, and the matching column of V flips with it. numericalRank
/// counts sigma_i > rankTol * sigma_1.
inline SvdFactors svd(const DenseMatrix& a, double rankTol) {
    if (!(rankTol >= 0)) throw ContractError("svd: rankTol must be nonnegative");
    auto raw = detail::raw_svd(a.eigen(), true);
    SvdFactors f{std::move(raw.U), std::move(raw.sigma), std::move(raw.V), 0};
    for (Index c = 0; c < f.U.cols(); ++c) {
        Index best = 0;
        double bestAbs = -1.0;
        for (Index r = 0; r < f.U.rows(); ++r) {
            const double v = std::abs(f.U(r, c));
            if (v > bestAbs) {
                bestAbs = v;
                best = r;
            }
        }
        if (f.U(best, c) < 0) {
            f.U.col(c) *= -1.0;
            f.V.col(c) *= -1.0;
        }
    }
    const double cutoff = f.sigma.size() ? rankTol * f.sigma(0) : 0.0;
    for (Index i = 0; i < f.sigma.size(); ++i) {
        if (f.sigma(i) > cutoff) ++f.numericalRank;
    }
    return f;
}

inline SvdFactors svd(const DenseMatrix& a) { return svd(a, default_rank_tol(a.rows(), a.cols())); }

/// Span of the first j left (or right) singular vectors.
inline Subspace leading_left(const SvdFactors& f, Index j) {
    if (j < 1 || j > f.U.cols()) throw ContractError("leading_left: j out of range");
    return Subspace(f.U.leftCols(j));
}

inline Subspace leading_right(const SvdFactors& f, Index j) {
    if (j < 1 || j > f.V.cols()) throw ContractError("leading_right: j out of range");
    return Subspace(f.V.leftCols(j));
}

/// sin of the largest principal angle, ||P_{U-perp} P_W||, taken as the
/// top singular value of (I - B_U B_U^T) B_W.
inline double sin_angle(const Subspace& u, const Subspace& w) {
    if (u.dim() != w.dim() || u.ambient_dim() != w.ambient_dim()) {
        throw ContractError("sin_angle: subspaces must share dimension and ambient dimension");
    }
    const Eigen::MatrixXd& bu = u.basis();
    const Eigen::MatrixXd& bw = w.basis();
    const Eigen::MatrixXd residual = bw - bu * (bu.transpose() * bw);
    return std::clamp(detail::spectral_norm(residual), 0.0, 1.0);
}

/// delta_j = sigma_j - sigma_{j+1} (1-based), with sigma_{r+1} = 0 at
/// j = numericalRank.
inline double spectral_gap(const SvdFactors& f, Index j) {
    if (j < 1 || j > f.numericalRank) {
        throw ContractError("spectral_gap: j = " + std::to_string(j) + " outside [1, " +
                            std::to_string(f.numericalRank) + "]");
    }
    const double next = j < f.numericalRank ? f.sigma(j) : 0.0;
    return f.sigma(j - 1) - next;
}

/// Haar-distributed N x k matrix with orthonormal columns: QR of a Gaussian
/// matrix with the signs of diag(R) folded into Q.
inline Eigen::MatrixXd haar_orthonormal(Index rows, Index k, Rng& rng) {
    Eigen::MatrixXd g(rows, k);
    for (Index i = 0; i < rows; ++i)
        for (Index c = 0; c < k; ++c) g(i, c) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(rows, k);
    const Eigen::MatrixXd& r = qr.matrixQR();
    for (Index c = 0; c < k; ++c) {
        if (r(c, c) < 0) q.col(c) *= -1.0;
    }
    return q;
}

/// A = U diag(spectrum) V^T with Haar-random U, V. Deterministic per seed.
inline DenseMatrix make_low_rank(Index rows, Index cols, std::span<const double> spectrum,
                                 std::uint64_t seed) {
    const auto k = static_cast<Index>(spectrum.size());
    if (rows < 1 || cols < 1) throw ContractError("make_low_rank: dimensions must be positive");
    if (k < 1 || k > std::min(rows, cols)) {
        throw ContractError("make_low_rank: spectrum length must be in [1, min(N, n)]");
    }
    for (Index i = 0; i < k; ++i) {
        if (!(spectrum[i] > 0) || !std::isfinite(spectrum[i])) {
            throw ContractError("make_low_rank: spectrum entries must be positive");
        }
        if (i > 0 && spectrum[i] > spectrum[i - 1]) {
            throw ContractError("make_low_rank: spectrum must be non-increasing");
        }
    }
    Rng rng(seed);
    const Eigen::MatrixXd u = haar_orthonormal(rows, k, rng);
    const Eigen::MatrixXd v = haar_orthonormal(cols, k, rng);
    const Eigen::VectorXd s = Eigen::Map<const Eigen::VectorXd>(spectrum.data(), k);
    return DenseMatrix(u * s.asDiagonal() * v.transpose());
}

inline DenseMatrix make_low_rank(Index rows, Index cols, std::initializer_list<double> spectrum,
                                 std::uint64_t seed) {
    const std::vector<double> s(spectrum);
    return make_low_rank(rows, cols, std::span<const double>(s), seed);
}

}  // namespace sparsecomp

#endif  // SPARSECOMP_MATCORE_HPP
