#ifndef SPARSECOMP_BOUNDS_HPP
#define SPARSECOMP_BOUNDS_HPP

// Closed-form error predictors for sparsification. Every O(.) constant is
// taken as 1, so these are shape-only: compare exponents, not magnitudes.
// log is the natural logarithm; log(2N) inside R and eps_j, log N inside
// r0 and h.

#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "matcore.hpp"
#include "sparsify.hpp"

namespace sparsecomp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// A predictor for a quantity that is at most 1 (relative error cap,
/// sin of an angle). `capped` is min(value, 1); `vacuous` marks value > 1.
struct Predictor {
    double value = 0;
    double capped = 0;
    bool vacuous = false;

    static Predictor of(double v) { return {v, std::min(v, 1.0), !(v <= 1.0)}; }
};

inline void to_json(nlohmann::json& j, const Predictor& p) {
    // JSON has no infinity; +inf is written as the string "inf"
    auto num = [](double v) -> nlohmann::json {
        if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
        return v;
    };
    j = nlohmann::json{{"value", num(p.value)}, {"capped", num(p.capped)}, {"vacuous", p.vacuous}};
}

namespace detail {

inline void require_tall(const DenseMatrix& a, const char* who) {
    if (a.rows() < a.cols()) {
        throw ContractError(std::string(who) + ": predictors assume N >= n (transpose the input)");
    }
}

inline void require_positive_m(double m, const char* who) {
    if (!(m > 0) || !std::isfinite(m)) throw ContractError(std::string(who) + ": m must be positive");
}

}  // namespace detail

/// R = ||A||_2 sqrt(N log(2N) / m).
inline double tropp_radius(const DenseMatrix& a, double m) {
    detail::require_tall(a, "tropp_radius");
    detail::require_positive_m(m, "tropp_radius");
    const double N = static_cast<double>(a.rows());
    return a.eigen().norm() * std::sqrt(N * std::log(2.0 * N) / m);
}

/// r0 = log(N log N / sqrt(m)) / 4.
inline double r0_threshold(Index N, double m) {
    if (N < 3) throw ContractError("r0_threshold: N must be >= 3");
    if (!(m >= 1)) throw ContractError("r0_threshold: m must be >= 1");
    const double nd = static_cast<double>(N);
    return 0.25 * std::log(nd * std::log(nd) / std::sqrt(m));
}

/// Classical relative error for sigma_j (Weyl + the Kundu-Drineas norm
/// bound): eps_j = R / sigma_j.
inline double weyl_rel_bound(double R, double sigmaJ) {
    if (!(sigmaJ > 0)) throw ContractError("weyl_rel_bound: sigma_j must be positive");
    return R / sigmaJ;
}

inline double weyl_rel_bound(const DenseMatrix& a, const SvdFactors& f, Index j, double m) {
    if (j < 1 || j > f.numericalRank) throw ContractError("weyl_rel_bound: j out of range");
    return weyl_rel_bound(tropp_radius(a, m), f.sigma(j - 1));
}

/// sqrt(j) eps_j^2: the quadratic-improvement shape for sigma_j.
inline double new_sv_rel_bound(Index j, double epsJ) {
    if (j < 1) throw ContractError("new_sv_rel_bound: j must be >= 1");
    if (!(epsJ >= 0)) throw ContractError("new_sv_rel_bound: eps_j must be nonnegative");
    return std::sqrt(static_cast<double>(j)) * epsJ * epsJ;
}

/// Wedin: sin angle <= 2 ||E|| / delta_j. +inf when delta_j = 0 < ||E||.
inline Predictor wedin_bound(double normE, double deltaJ) {
    if (!(normE >= 0) || !(deltaJ >= 0)) throw ContractError("wedin_bound: inputs must be nonnegative");
    if (normE == 0) return Predictor::of(0.0);
    if (deltaJ == 0) return Predictor::of(kInf);
    return Predictor::of(2.0 * normE / deltaJ);
}

/// sqrt(j) (r / delta_j + R / sigma_j + R^2 / (sigma_j delta_j)).
inline Predictor new_subspace_bound(Index j, Index r, double R, double sigmaJ, double deltaJ) {
    if (j < 1 || r < j) throw ContractError("new_subspace_bound: need 1 <= j <= r");
    if (!(sigmaJ > 0) || !(R >= 0) || !(deltaJ >= 0)) {
        throw ContractError("new_subspace_bound: need sigma_j > 0, R >= 0, delta_j >= 0");
    }
    if (deltaJ == 0) return Predictor::of(kInf);
    const double rd = static_cast<double>(r);
    return Predictor::of(std::sqrt(static_cast<double>(j)) *
                         (rd / deltaJ + R / sigmaJ + R * R / (sigmaJ * deltaJ)));
}

/// Largest sup-norm over the leading r left and right singular vectors.
inline double delocalization(const SvdFactors& f, Index r) {
    if (r < 1 || r > f.U.cols()) throw ContractError("delocalization: r out of range");
    return std::max(f.U.leftCols(r).cwiseAbs().maxCoeff(), f.V.leftCols(r).cwiseAbs().maxCoeff());
}

struct HParam {
    double h = 0;
    double delta = 0;  // max sup-norm of the leading singular vectors
    double cs = 0;
    Index r = 0;
    bool rankRegime = false;            // r <= N / sqrt(m)
    bool delocalizationRegime = false;  // delta^2 <= sqrt(N/n) log N / r
};

/// h = r (sqrt(1/(N log N)) + delta^2 cs(A) sqrt(n / (m log N))).
inline HParam h_param(const DenseMatrix& a, const SvdFactors& f, double m) {
    detail::require_tall(a, "h_param");
    detail::require_positive_m(m, "h_param");
    if (f.numericalRank < 1) throw ContractError("h_param: matrix has numerical rank 0");
    if (a.rows() < 2) throw ContractError("h_param: N must be >= 2");
    const double N = static_cast<double>(a.rows());
    const double n = static_cast<double>(a.cols());
    const double logN = std::log(N);

    HParam h;
    h.r = f.numericalRank;
    h.delta = delocalization(f, h.r);
    h.cs = norms(a).cs;
    const double rd = static_cast<double>(h.r);
    h.h = rd * (std::sqrt(1.0 / (N * logN)) + h.delta * h.delta * h.cs * std::sqrt(n / (m * logN)));
    h.rankRegime = rd <= N / std::sqrt(m);
    h.delocalizationRegime = h.delta * h.delta <= std::sqrt(N / n) * logN / rd;
    return h;
}

/// Tail level for ||E||: with probability >= 1 - e^{-s},
///   ||E|| <= 4 ||A||_2 sqrt(N/m) + C0 (||A||_1 / m) sqrt(log N + s),
/// and the weaker cs form ||A||_2 (4 sqrt(N/m) + C0 cs(A) (N/m) sqrt(log N + s)).
/// C0 = 1. The two forms agree when N = n; for N > n the cs form is larger
/// by sqrt(N/n) in its second term.
struct NormTail {
    double firstTerm = 0;
    double secondTerm = 0;
    double total = 0;
    double csForm = 0;
    double failureProbability = 0;  // e^{-s}
};

inline NormTail norm_tail_bound(const DenseMatrix& a, double m, double s) {
    detail::require_positive_m(m, "norm_tail_bound");
    if (!(s >= 0)) throw ContractError("norm_tail_bound: s must be nonnegative");
    const double N = static_cast<double>(a.rows());
    const auto ns = norms(a);
    const double root = std::sqrt(std::log(N) + s);
    NormTail t;
    t.firstTerm = 4.0 * ns.l2 * std::sqrt(N / m);
    t.secondTerm = ns.l1 / m * root;
    t.total = t.firstTerm + t.secondTerm;
    t.csForm = ns.l2 * (4.0 * std::sqrt(N / m) + ns.cs * (N / m) * root);
    t.failureProbability = std::exp(-s);
    return t;
}

struct GeneralBoundInputs {
    double t = 0;       // bilinear-form level: |x^T E y| <= t on the leading subspaces
    double M = 0;       // spectral level: ||E|| <= M
    Index j = 1;
    Index r = 1;
    double sigmaJ = 0;
    double sigmaJPerturbed = 0;
    double deltaJ = 0;
};

struct GeneralBound {
    double svLower = 0;
    double svUpper = 0;
    Predictor subspace;
};

/// sigma_j - sqrt(j) t <= sigma'_j <= sigma_j + sqrt(j)(t + M^2/sigma'_j + M^3/sigma'_j^2),
/// sin angle <= sqrt(j)(r/delta_j + M/sigma_j + M^2/(sigma_j delta_j)).
inline GeneralBound general_bound(const GeneralBoundInputs& in) {
    if (!(in.t >= 0) || !(in.M >= 0)) throw ContractError("general_bound: t and M must be nonnegative");
    if (in.j < 1 || in.j > in.r) throw ContractError("general_bound: need 1 <= j <= r");
    if (!(in.sigmaJ > 0) || !(in.sigmaJPerturbed > 0)) {
        throw ContractError("general_bound: sigma_j and sigma'_j must be positive");
    }
    const double sj = std::sqrt(static_cast<double>(in.j));
    const double sp = in.sigmaJPerturbed;
    GeneralBound g;
    g.svLower = in.sigmaJ - sj * in.t;
    g.svUpper = in.sigmaJ + sj * (in.t + in.M * in.M / sp + in.M * in.M * in.M / (sp * sp));
    g.subspace = new_subspace_bound(in.j, in.r, in.M, in.sigmaJ, in.deltaJ);
    return g;
}

/// T = sqrt(rho) + delta^2 L / 3. With deltaInf = 1 this is the
/// completion-side sqrt(rho_1) + L_1 / 3.
inline double bilinear_T(double rho, double L, double deltaInf = 1.0) {
    if (!(rho >= 0) || !(L >= 0) || !(deltaInf >= 0)) {
        throw ContractError("bilinear_T: inputs must be nonnegative");
    }
    return std::sqrt(rho) + deltaInf * deltaInf * L / 3.0;
}

/// Bernstein: P(|sum xi| >= t) <= 2 exp(-(t^2/2) / (W + b t / 3)).
inline double bernstein_tail(double t, double W, double b) {
    if (!(t >= 0) || !(W >= 0) || !(b >= 0)) throw ContractError("bernstein_tail: inputs must be nonnegative");
    if (W == 0 && b == 0) return t > 0 ? 0.0 : 1.0;
    return std::min(1.0, 2.0 * std::exp(-(t * t / 2.0) / (W + b * t / 3.0)));
}

/// Simplified bilinear-form tail P(|x^T E y| >= t T) <= 2 exp(-min(t^2, t)/2).
inline double bilinear_tail(double t) {
    if (!(t >= 0)) throw ContractError("bilinear_tail: t must be nonnegative");
    return std::min(1.0, 2.0 * std::exp(-std::min(t * t, t) / 2.0));
}

/// All sparsification predictors for (A, m), evaluated on the exact
/// spectrum of A.
struct SparsifyPredictors {
    double m = 0;
    double R = 0;
    std::vector<double> eps;           // eps_j, j = 1..r
    double eps1LogN = 0;               // eps_1 with log N in place of log(2N)
    double r0 = 0;
    HParam h;
    EntryBounds entry;
    double T = 0;                      // sqrt(rho) + delta^2 L / 3
    std::vector<Predictor> weylRel;    // eps_j
    std::vector<Predictor> newSvRel;   // sqrt(j) eps_j^2
    std::vector<Predictor> wedin;      // 2 R / delta_j
    std::vector<Predictor> newSubspace;
    NormTail normTail;                 // at s = 2 log N (failure probability N^-2)
    double hEps1 = 0;                  // h * eps_1
    double eps1Squared = 0;
    double feasibleMMax = 0;
    bool feasible = false;
    bool lowRankRegime = false;        // r <= r0
    bool epsBelowOne = false;          // R <= ||A||
};

inline SparsifyPredictors sparsify_predictors(const DenseMatrix& a, const SvdFactors& f, double m) {
    detail::require_tall(a, "sparsify_predictors");
    SparsifyPredictors p;
    p.m = m;
    p.R = tropp_radius(a, m);
    const Index r = f.numericalRank;
    if (r < 1) throw ContractError("sparsify_predictors: matrix has numerical rank 0");
    const double N = static_cast<double>(a.rows());
    for (Index j = 1; j <= r; ++j) {
        const double sj = f.sigma(j - 1);
        const double eps = weyl_rel_bound(p.R, sj);
        const double gap = spectral_gap(f, j);
        p.eps.push_back(eps);
        p.weylRel.push_back(Predictor::of(eps));
        p.newSvRel.push_back(Predictor::of(new_sv_rel_bound(j, eps)));
        p.wedin.push_back(wedin_bound(p.R, gap));
        p.newSubspace.push_back(new_subspace_bound(j, r, p.R, sj, gap));
    }
    p.eps1LogN = a.eigen().norm() / f.sigma(0) * std::sqrt(N * std::log(N) / m);
    p.r0 = a.rows() >= 3 && m >= 1 ? r0_threshold(a.rows(), m) : 0.0;
    p.h = h_param(a, f, m);
    p.entry = entry_variance_bounds(a, m);
    p.T = bilinear_T(p.entry.rho, p.entry.L, p.h.delta);
    p.normTail = norm_tail_bound(a, m, 2.0 * std::log(N));
    p.eps1Squared = p.eps.front() * p.eps.front();
    p.hEps1 = p.h.h * p.eps.front();
    p.feasibleMMax = feasible_m_max(a);
    p.feasible = m <= p.feasibleMMax * (1.0 + 1e-12);
    p.lowRankRegime = static_cast<double>(r) <= p.r0;
    p.epsBelowOne = p.R <= f.sigma(0);
    return p;
}

/// BoundReport: {predictor name -> {value, capped, vacuous}} plus scalar
/// parameters and regime flags.
inline nlohmann::json bound_report(const SparsifyPredictors& p) {
    using nlohmann::json;
    json preds = json::object();
    for (std::size_t k = 0; k < p.eps.size(); ++k) {
        const std::string j = std::to_string(k + 1);
        preds["weylRel_" + j] = p.weylRel[k];
        preds["newSvRel_" + j] = p.newSvRel[k];
        preds["wedin_" + j] = p.wedin[k];
        preds["newSubspace_" + j] = p.newSubspace[k];
    }
    json out;
    out["side"] = "sparsify";
    out["m"] = p.m;
    out["predictors"] = preds;
    out["parameters"] = {
        {"R", p.R},
        {"eps", p.eps},
        {"eps1LogN", p.eps1LogN},
        {"r0", p.r0},
        {"h", p.h.h},
        {"delta", p.h.delta},
        {"cs", p.h.cs},
        {"rho", p.entry.rho},
        {"L", p.entry.L},
        {"T", p.T},
        {"hEps1", p.hEps1},
        {"eps1Squared", p.eps1Squared},
        {"feasibleMMax", p.feasibleMMax},
        {"normTail", {{"firstTerm", p.normTail.firstTerm},
                      {"secondTerm", p.normTail.secondTerm},
                      {"total", p.normTail.total},
                      {"csForm", p.normTail.csForm},
                      {"failureProbability", p.normTail.failureProbability}}},
    };
    out["regimeFlags"] = {
        {"feasible", p.feasible},
        {"lowRank", p.lowRankRegime},
        {"epsBelowOne", p.epsBelowOne},
        {"rankBelowNOverSqrtM", p.h.rankRegime},
        {"delocalized", p.h.delocalizationRegime},
        // log N vs log(2N) in eps_1 differ by more than 1%
        {"eps1LogVariantDiffers", std::abs(p.eps1LogN / p.eps.front() - 1.0) > 0.01},
    };
    out["shapeOnly"] = true;
    return out;
}

}  // namespace sparsecomp

#endif  // SPARSECOMP_BOUNDS_HPP
