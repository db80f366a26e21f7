#ifndef SPARSECOMP_COMPLETION_HPP
#define SPARSECOMP_COMPLETION_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "bounds.hpp"
#include "matcore.hpp"
#include "rng.hpp"

namespace sparsecomp {

enum class NoiseKind { none, gaussian, bounded_uniform };

inline const char* to_string(NoiseKind k) {
    switch (k) {
        case NoiseKind::none: return "none";
        case NoiseKind::gaussian: return "gaussian";
        case NoiseKind::bounded_uniform: return "boundedUniform";
    }
    return "none";
}

inline NoiseKind noise_kind_from_string(const std::string& s) {
    if (s == "none") return NoiseKind::none;
    if (s == "gaussian") return NoiseKind::gaussian;
    if (s == "boundedUniform" || s == "bounded_uniform" || s == "uniform") return NoiseKind::bounded_uniform;
    throw ContractError("unknown noise kind '" + s + "'");
}

/// Partially observed, noisy copy of A: b_ij = (a_ij + z_ij) chi_ij with
/// chi_ij ~ Bernoulli(p). `noise` holds the z_ij that were drawn (also at
/// unobserved positions, where they do not enter b).
///
/// Gaussian noise has standard deviation sigma, which makes it
/// sigma^2-subgaussian in the sense P(|z| > t) <= 2 exp(-t^2 / 2 sigma^2).
/// Bounded-uniform noise is uniform on [-sigma, sigma].
struct ObservationSet {
    Eigen::MatrixXd observed;
    Eigen::MatrixXd mask;  // exactly 0.0 or 1.0
    Eigen::MatrixXd noise;
    double p = 1;
    NoiseKind noiseKind = NoiseKind::none;
    double sigma = 0;
    std::uint64_t seed = 0;

    Index rows() const noexcept { return observed.rows(); }
    Index cols() const noexcept { return observed.cols(); }
};

inline void validate_observation_probability(double p) {
    if (!(p > 0 && p <= 1)) throw ContractError("observation probability p must lie in (0, 1]");
}

/// Per entry in row-major order: one uniform for the mask, then the noise
/// draw (skipped for NoiseKind::none).
inline ObservationSet observe(const DenseMatrix& a, double p, NoiseKind kind, double sigma,
                              std::uint64_t seed) {
    validate_observation_probability(p);
    if (!(sigma >= 0) || !std::isfinite(sigma)) throw ContractError("observe: sigma must be >= 0");
    const Index N = a.rows(), n = a.cols();
    ObservationSet obs{Eigen::MatrixXd::Zero(N, n), Eigen::MatrixXd::Zero(N, n),
                       Eigen::MatrixXd::Zero(N, n), p, kind, sigma, seed};
    Rng rng(seed);
    for (Index i = 0; i < N; ++i)
        for (Index j = 0; j < n; ++j) {
            const bool seen = rng.uniform() < p;
            double z = 0;
            switch (kind) {
                case NoiseKind::none: break;
                case NoiseKind::gaussian: z = sigma * rng.normal(); break;
                case NoiseKind::bounded_uniform: z = sigma * (2.0 * rng.uniform() - 1.0); break;
            }
            obs.noise(i, j) = z;
            if (seen) {
                obs.mask(i, j) = 1.0;
                obs.observed(i, j) = a(i, j) + z;
            }
        }
    return obs;
}

/// B~ = B / p, an unbiased estimate of A.
inline DenseMatrix rescale(const ObservationSet& obs) {
    validate_observation_probability(obs.p);
    return DenseMatrix(obs.observed / obs.p);
}

/// Projection of B~ onto its top-j left singular subspace.
inline DenseMatrix estimate_from_rescaled(const DenseMatrix& rescaled, Index j) {
    if (j < 1 || j > std::min(rescaled.rows(), rescaled.cols())) {
        throw ContractError("estimate: j must lie in [1, min(N, n)]");
    }
    const auto f = svd(rescaled);
    const Eigen::MatrixXd uj = f.U.leftCols(j);
    return DenseMatrix(uj * (uj.transpose() * rescaled.eigen()));
}

inline DenseMatrix estimate(const ObservationSet& obs, Index j) {
    return estimate_from_rescaled(rescale(obs), j);
}

/// ||A(k) - A~(k)||_2 for 0-based column k.
inline double column_estimate_error(const DenseMatrix& a, const DenseMatrix& est, Index k) {
    if (a.rows() != est.rows() || a.cols() != est.cols()) {
        throw ContractError("column_estimate_error: shape mismatch");
    }
    if (k < 0 || k >= a.cols()) throw ContractError("column_estimate_error: column out of range");
    return (a.eigen().col(k) - est.eigen().col(k)).norm();
}

/// Splits H = B~ - A into the sampling part E_ij = a_ij (chi_ij - p) / p
/// and the noise part F_ij = z_ij chi_ij / p.
struct NoiseDecomposition {
    Eigen::MatrixXd H;
    Eigen::MatrixXd E;
    Eigen::MatrixXd F;
};

inline NoiseDecomposition decompose(const DenseMatrix& a, const ObservationSet& obs) {
    NoiseDecomposition d;
    d.H = obs.observed / obs.p - a.eigen();
    d.E = (a.eigen().array() * (obs.mask.array() - obs.p) / obs.p).matrix();
    d.F = (obs.noise.array() * obs.mask.array() / obs.p).matrix();
    return d;
}

/// Largest |H - (E + F)| measured in units of the rounding scale
/// eps * (|a| + |z|) / p of each entry. A handful of units is the
/// floating-point floor of the identity.
inline double decomposition_residual_ulps(const DenseMatrix& a, const ObservationSet& obs,
                                          const NoiseDecomposition& d) {
    double worst = 0;
    constexpr double eps = std::numeric_limits<double>::epsilon();
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j) {
            const double diff = std::abs(d.H(i, j) - (d.E(i, j) + d.F(i, j)));
            if (diff == 0) continue;
            const double scale = eps * (std::abs(a(i, j)) + std::abs(obs.noise(i, j))) / obs.p;
            worst = std::max(worst, scale > 0 ? diff / scale : kInf);
        }
    return worst;
}

/// Completion-side predictors, all with unit constants.
struct CompletionPredictors {
    double p = 1;
    double sigma = 0;
    double eps = 0.1;
    Index r = 0;
    double maxEntry = 0;
    double mathcalB = 0;  // sqrt(N/p)|A|max + (sigma/p) sqrt(N) + (|A|max/p) sqrt(log N)
    double rho1 = 0;
    double L1 = 0;
    double rho2 = 0;
    double T1 = 0;
    Predictor thm51Rel;
    bool thm51Condition = false;  // sigma_1 >= 4 r^3 (|A|max + sigma) / sqrt(eps p)
    std::vector<Predictor> svRel;       // per j
    std::vector<Predictor> subspace;    // per j
    double fullRecoveryBound = 0;       // (r^{3/2} + sqrt N) sigma_1 / sigma_r
    std::vector<double> truncatedBound;        // r^{3/2} sigma_1/delta_j + sqrt N sigma_1/sigma_j
    std::vector<double> truncatedPlusTail;     // truncatedBound_j + sigma_{j+1}
    Index bestTruncation = 1;                   // argmin_j truncatedPlusTail
    std::vector<double> columnBound;           // per column k
};

inline CompletionPredictors completion_predictors(const DenseMatrix& a, const SvdFactors& f, double p,
                                                  double sigma, double eps = 0.1) {
    validate_observation_probability(p);
    if (!(sigma >= 0)) throw ContractError("completion_predictors: sigma must be >= 0");
    if (!(eps > 0)) throw ContractError("completion_predictors: eps must be positive");
    if (f.numericalRank < 1) throw ContractError("completion_predictors: matrix has numerical rank 0");
    const double N = static_cast<double>(a.rows());
    const double logN = std::log(N);
    const double amax = a.eigen().cwiseAbs().maxCoeff();

    CompletionPredictors c;
    c.p = p;
    c.sigma = sigma;
    c.eps = eps;
    c.r = f.numericalRank;
    c.maxEntry = amax;
    c.rho1 = amax * amax / p;
    c.L1 = amax / p;
    c.rho2 = sigma * sigma / p;
    c.T1 = bilinear_T(c.rho1, c.L1);
    c.mathcalB = std::sqrt(N / p) * amax + sigma / p * std::sqrt(N) + amax / p * std::sqrt(logN);

    const double rd = static_cast<double>(c.r);
    const double r3 = rd * rd * rd;
    const double B = c.mathcalB;
    const double s1 = f.sigma(0);
    const double sr = f.sigma(c.r - 1);
    c.thm51Rel = Predictor::of(4.0 * (B * B * B / (s1 * s1 * s1) + B * B / (s1 * s1) +
                                      r3 * (amax + sigma) / std::sqrt(eps * p)));
    c.thm51Condition = s1 >= 4.0 * r3 / std::sqrt(eps * p) * (amax + sigma);

    const double entryScale = amax / std::sqrt(p) + (amax + sigma) / p;
    for (Index j = 1; j <= c.r; ++j) {
        const double sj = f.sigma(j - 1);
        const double dj = spectral_gap(f, j);
        const double jd = static_cast<double>(j);
        c.svRel.push_back(Predictor::of(rd / sj * entryScale + 4.0 * std::sqrt(jd) * B * B / (sj * sj) +
                                        4.0 * jd * B * B * B / (sj * sj * sj)));
        c.subspace.push_back(dj > 0 ? Predictor::of(4.0 * std::sqrt(2.0 * jd) *
                                                    (rd / dj * entryScale + B / sj + B * B / (sj * dj)))
                                    : Predictor::of(kInf));
        const double trunc = dj > 0 ? std::pow(rd, 1.5) * s1 / dj + std::sqrt(N) * s1 / sj : kInf;
        const double tail = j < c.r ? f.sigma(j) : 0.0;
        c.truncatedBound.push_back(trunc);
        c.truncatedPlusTail.push_back(trunc + tail);
    }
    c.fullRecoveryBound = (std::pow(rd, 1.5) + std::sqrt(N)) * s1 / sr;
    for (std::size_t k = 1; k < c.truncatedPlusTail.size(); ++k) {
        if (c.truncatedPlusTail[k] < c.truncatedPlusTail[c.bestTruncation - 1]) {
            c.bestTruncation = static_cast<Index>(k + 1);
        }
    }
    for (Index k = 0; k < a.cols(); ++k) {
        c.columnBound.push_back((std::pow(rd, 1.5) + std::sqrt(N)) / sr *
                                    (a.eigen().col(k).norm() + std::sqrt(N)) +
                                std::sqrt(rd));
    }
    return c;
}

inline CompletionPredictors completion_predictors(const DenseMatrix& a, double p, double sigma,
                                                  double eps = 0.1) {
    return completion_predictors(a, svd(a), p, sigma, eps);
}

inline nlohmann::json completion_report(const CompletionPredictors& c) {
    using nlohmann::json;
    auto finite = [](const std::vector<double>& v) {
        json arr = json::array();
        for (double x : v) arr.push_back(std::isinf(x) ? json("inf") : json(x));
        return arr;
    };
    json preds = json::object();
    preds["thm51Rel"] = c.thm51Rel;
    for (std::size_t k = 0; k < c.svRel.size(); ++k) {
        preds["svRel_" + std::to_string(k + 1)] = c.svRel[k];
        preds["subspace_" + std::to_string(k + 1)] = c.subspace[k];
    }
    json out;
    out["side"] = "completion";
    out["p"] = c.p;
    out["sigma"] = c.sigma;
    out["eps"] = c.eps;
    out["predictors"] = preds;
    out["parameters"] = {
        {"r", c.r},
        {"maxEntry", c.maxEntry},
        {"mathcalB", c.mathcalB},
        {"rho1", c.rho1},
        {"L1", c.L1},
        {"rho2", c.rho2},
        {"T1", c.T1},
        {"fullRecoveryBound", c.fullRecoveryBound},
        {"truncatedBound", finite(c.truncatedBound)},
        {"truncatedPlusTail", finite(c.truncatedPlusTail)},
        {"bestTruncation", c.bestTruncation},
        {"columnBound", c.columnBound},
    };
    out["regimeFlags"] = {{"thm51Condition", c.thm51Condition}};
    out["shapeOnly"] = true;
    return out;
}

}  // namespace sparsecomp

#endif  // SPARSECOMP_COMPLETION_HPP
