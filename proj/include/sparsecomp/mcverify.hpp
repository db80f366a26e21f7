#ifndef SPARSECOMP_MCVERIFY_HPP
#define SPARSECOMP_MCVERIFY_HPP

// Monte-Carlo trial harness. A TrialConfig describes one experiment over a
// parameter grid; each (cell, trial) pair draws from its own stream seeded
// by derive_seed(masterSeed, cell, trial), trials may run on any number of
// threads, and aggregation folds results in ascending trial order. The
// report is therefore a pure function of the config.
//
// Deterministic per-trial inequalities (Weyl, the pathwise entry bound,
// H = E + F, sin in [0, 1], the rank inequality) throw InvariantViolation
// on the first failure.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "bounds.hpp"
#include "completion.hpp"
#include "matcore.hpp"
#include "rng.hpp"
#include "sparsify.hpp"

#ifndef SPARSECOMP_VERSION
#define SPARSECOMP_VERSION "0.0.0"
#endif

namespace sparsecomp {

inline constexpr const char* kTrialConfigSchema = "sparsecomp.trial-config/1";
inline constexpr const char* kTrialReportSchema = "sparsecomp.trial-report/1";

enum class ExperimentKind { sparsify_sv, sparsify_subspace, completion_full, completion_column, concentration };

inline const char* to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::sparsify_sv: return "sparsify-sv";
        case ExperimentKind::sparsify_subspace: return "sparsify-subspace";
        case ExperimentKind::completion_full: return "completion-full";
        case ExperimentKind::completion_column: return "completion-column";
        case ExperimentKind::concentration: return "concentration";
    }
    return "?";
}

inline ExperimentKind experiment_kind_from_string(const std::string& s) {
    for (auto k : {ExperimentKind::sparsify_sv, ExperimentKind::sparsify_subspace, ExperimentKind::completion_full,
                   ExperimentKind::completion_column, ExperimentKind::concentration}) {
        if (s == to_string(k)) return k;
    }
    throw ContractError("unknown experiment kind '" + s + "'");
}

struct MatrixSpec {
    Index rows = 16;
    Index cols = 16;
    std::vector<double> spectrum{1.0};
    std::uint64_t seed = 1;

    DenseMatrix build() const { return make_low_rank(rows, cols, std::span<const double>(spectrum), seed); }
};

struct SlopeBand {
    std::string metric;
    double min = 0;
    double max = 0;
};

struct TrialConfig {
    ExperimentKind kind = ExperimentKind::sparsify_sv;
    MatrixSpec matrix;
    std::vector<double> grid;           // m values (sparsify, concentration) or p values (completion)
    std::int64_t trials = 100;
    std::vector<double> quantiles{0.1, 0.5, 0.9};
    std::uint64_t masterSeed = 1;
    ClampPolicy clamp = ClampPolicy::strict;
    Index index = 0;                    // j; 0 means "rank" for completion and 1 elsewhere
    NoiseKind noiseKind = NoiseKind::none;
    double sigma = 0;
    double eps = 0.1;
    std::vector<double> tGrid{2.0, 5.0, 10.0};
    std::string side = "sparsify";      // concentration: sparsify | completion
    std::optional<SlopeBand> expectSlope;
    bool expectMonotoneDecrease = false;
    std::optional<double> expectHalfWedinFraction;

    void validate() const {
        if (trials < 1) throw ContractError("config: trials must be >= 1");
        if (grid.empty()) throw ContractError("config: grid must be nonempty");
        for (double q : quantiles) {
            if (!(q > 0 && q < 1)) throw ContractError("config: quantiles must lie in (0, 1)");
        }
        for (double t : tGrid) {
            if (!(t > 0)) throw ContractError("config: tGrid entries must be positive");
        }
        if (side != "sparsify" && side != "completion") throw ContractError("config: side must be sparsify or completion");
    }
};

// --- statistics ----------------------------------------------------------

/// Nearest-rank quantile: the ceil(q T)-th smallest value.
inline double quantile_nearest_rank(std::vector<double> v, double q) {
    if (v.empty()) throw ContractError("quantile of an empty sample");
    std::sort(v.begin(), v.end());
    const auto T = static_cast<double>(v.size());
    auto k = static_cast<std::size_t>(std::ceil(q * T));
    k = std::clamp<std::size_t>(k, 1, v.size());
    return v[k - 1];
}

/// Median with the two middle values averaged for even samples.
inline double median(std::vector<double> v) {
    if (v.empty()) throw ContractError("median of an empty sample");
    const std::size_t h = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(h), v.end());
    const double hi = v[h];
    if (v.size() % 2) return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(h));
    return 0.5 * (lo + hi);
}

/// Ordinary least-squares slope of log(value) against log(param).
inline double fit_loglog_slope(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 3) throw ContractError("fit_loglog_slope: need at least 3 points");
    double sx = 0, sy = 0;
    for (const auto& [x, y] : points) {
        if (!(x > 0) || !(y > 0)) throw ContractError("fit_loglog_slope: points must be positive");
        sx += std::log(x);
        sy += std::log(y);
    }
    const double n = static_cast<double>(points.size());
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (const auto& [x, y] : points) {
        const double dx = std::log(x) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(y) - my);
    }
    if (sxx == 0) throw ContractError("fit_loglog_slope: params must not all be equal");
    return sxy / sxx;
}

struct MetricSummary {
    double mean = 0;
    double sd = 0;  // sample standard deviation
    double median = 0;
    double min = 0;
    double max = 0;
    std::vector<std::pair<double, double>> quantiles;
};

inline MetricSummary summarize(const std::vector<double>& v, const std::vector<double>& qs) {
    MetricSummary s;
    const double n = static_cast<double>(v.size());
    // ascending-order sums keep the fold independent of scheduling
    double sum = 0;
    for (double x : v) sum += x;
    s.mean = sum / n;
    double ss = 0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.sd = v.size() > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
    s.median = median(v);
    s.min = *std::min_element(v.begin(), v.end());
    s.max = *std::max_element(v.begin(), v.end());
    for (double q : qs) s.quantiles.emplace_back(q, quantile_nearest_rank(v, q));
    return s;
}

// --- report --------------------------------------------------------------

struct CellRecord {
    double param = 0;
    std::map<std::string, MetricSummary> metrics;
    std::map<std::string, double> predictors;
    std::map<std::string, double> ratios;
    std::map<std::string, bool> flags;
};

struct Check {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct TrialReport {
    ExperimentKind kind = ExperimentKind::sparsify_sv;
    std::string paramName;
    std::vector<CellRecord> cells;
    std::map<std::string, double> slopes;
    std::vector<Check> checks;
    std::int64_t trialsRun = 0;
    std::string configDigest;
    std::uint64_t masterSeed = 0;

    bool all_passed() const {
        return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
    }
    const Check* find_check(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }
};

namespace detail {

inline nlohmann::json json_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

inline double number_from_json(const nlohmann::json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return kInf;
        if (s == "-inf") return -kInf;
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
        throw ContractError("expected a number, got '" + s + "'");
    }
    return j.get<double>();
}

inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

/// FNV-1a, 64 bit, printed as 16 hex digits.
inline std::string fnv1a_hex(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace detail

inline nlohmann::json to_json(const TrialConfig& c) {
    using nlohmann::json;
    json j;
    j["schema"] = kTrialConfigSchema;
    j["experiment"] = to_string(c.kind);
    j["matrix"] = {{"rows", c.matrix.rows}, {"cols", c.matrix.cols}, {"spectrum", c.matrix.spectrum},
                   {"seed", c.matrix.seed}};
    j["grid"] = c.grid;
    j["trials"] = c.trials;
    j["quantiles"] = c.quantiles;
    j["masterSeed"] = c.masterSeed;
    j["clamp"] = c.clamp == ClampPolicy::clamp;
    j["index"] = c.index;
    j["noise"] = {{"kind", to_string(c.noiseKind)}, {"sigma", c.sigma}};
    j["eps"] = c.eps;
    j["tGrid"] = c.tGrid;
    j["side"] = c.side;
    if (c.expectSlope) {
        j["expectSlope"] = {{"metric", c.expectSlope->metric}, {"min", c.expectSlope->min}, {"max", c.expectSlope->max}};
    }
    if (c.expectMonotoneDecrease) j["expectMonotoneDecrease"] = true;
    if (c.expectHalfWedinFraction) j["expectHalfWedinFraction"] = *c.expectHalfWedinFraction;
    return j;
}

/// Parses the config schema documented in the README. Unknown keys are
/// rejected so that typos do not silently fall back to defaults.
inline TrialConfig trial_config_from_json(const nlohmann::json& j) {
    static const std::vector<std::string> known{
        "schema", "experiment", "matrix", "grid", "trials", "quantiles", "masterSeed", "clamp", "index", "noise",
        "eps", "tGrid", "side", "expectSlope", "expectMonotoneDecrease", "expectHalfWedinFraction", "threads"};
    for (const auto& [key, _] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw ContractError("config: unknown key '" + key + "'");
        }
    }
    if (j.contains("schema") && j.at("schema").get<std::string>() != kTrialConfigSchema) {
        throw ContractError("config: unsupported schema '" + j.at("schema").get<std::string>() + "'");
    }
    TrialConfig c;
    c.kind = experiment_kind_from_string(j.at("experiment").get<std::string>());
    const auto& m = j.at("matrix");
    c.matrix.rows = m.at("rows").get<Index>();
    c.matrix.cols = m.at("cols").get<Index>();
    c.matrix.spectrum = m.at("spectrum").get<std::vector<double>>();
    c.matrix.seed = m.value("seed", std::uint64_t{1});
    c.grid = j.at("grid").get<std::vector<double>>();
    c.trials = j.value("trials", c.trials);
    c.quantiles = j.value("quantiles", c.quantiles);
    c.masterSeed = j.value("masterSeed", c.masterSeed);
    c.clamp = j.value("clamp", false) ? ClampPolicy::clamp : ClampPolicy::strict;
    c.index = j.value("index", Index{0});
    if (j.contains("noise")) {
        c.noiseKind = noise_kind_from_string(j.at("noise").value("kind", std::string("none")));
        c.sigma = j.at("noise").value("sigma", 0.0);
    }
    c.eps = j.value("eps", c.eps);
    c.tGrid = j.value("tGrid", c.tGrid);
    c.side = j.value("side", c.side);
    if (j.contains("expectSlope")) {
        const auto& s = j.at("expectSlope");
        c.expectSlope = SlopeBand{s.at("metric").get<std::string>(), s.at("min").get<double>(), s.at("max").get<double>()};
    }
    c.expectMonotoneDecrease = j.value("expectMonotoneDecrease", false);
    if (j.contains("expectHalfWedinFraction")) c.expectHalfWedinFraction = j.at("expectHalfWedinFraction").get<double>();
    c.validate();
    return c;
}

/// Digest of the canonical config (thread count excluded).
inline std::string config_digest(const TrialConfig& c) { return detail::fnv1a_hex(to_json(c).dump()); }

inline nlohmann::json to_json(const TrialReport& r) {
    using nlohmann::json;
    json cells = json::array();
    for (const auto& c : r.cells) {
        json metrics = json::object();
        for (const auto& [name, s] : c.metrics) {
            json qs = json::object();
            for (const auto& [q, v] : s.quantiles) qs[detail::format_double(q)] = detail::json_number(v);
            metrics[name] = {{"mean", detail::json_number(s.mean)},     {"sd", detail::json_number(s.sd)},
                             {"median", detail::json_number(s.median)}, {"min", detail::json_number(s.min)},
                             {"max", detail::json_number(s.max)},       {"quantiles", qs}};
        }
        json preds = json::object();
        for (const auto& [k, v] : c.predictors) preds[k] = detail::json_number(v);
        json ratios = json::object();
        for (const auto& [k, v] : c.ratios) ratios[k] = detail::json_number(v);
        cells.push_back({{"param", c.param}, {"metrics", metrics}, {"predictors", preds}, {"ratios", ratios},
                         {"flags", c.flags}});
    }
    json slopes = json::object();
    for (const auto& [k, v] : r.slopes) slopes[k] = detail::json_number(v);
    json checks = json::array();
    for (const auto& c : r.checks) checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    return {{"schema", kTrialReportSchema},
            {"experiment", to_string(r.kind)},
            {"param", r.paramName},
            {"cells", cells},
            {"slopes", slopes},
            {"checks", checks},
            {"passed", r.all_passed()},
            {"metadata",
             {{"toolVersion", SPARSECOMP_VERSION},
              {"configDigest", r.configDigest},
              {"masterSeed", r.masterSeed},
              {"trialsRun", r.trialsRun}}}};
}

/// One row per cell x metric (empirical summaries) and per cell x
/// predictor. Quantile columns follow the config's quantile list.
inline void write_csv(std::ostream& out, const TrialReport& r) {
    out << "# tool " << SPARSECOMP_VERSION << " config " << r.configDigest << " seed " << r.masterSeed << '\n';
    std::vector<double> qs;
    if (!r.cells.empty() && !r.cells.front().metrics.empty()) {
        for (const auto& [q, _] : r.cells.front().metrics.begin()->second.quantiles) qs.push_back(q);
    }
    out << "experiment,cell," << r.paramName << ",type,name,value,mean,sd,median,min,max";
    for (double q : qs) out << ",q" << detail::format_double(q);
    out << '\n';
    for (std::size_t i = 0; i < r.cells.size(); ++i) {
        const auto& c = r.cells[i];
        const std::string prefix =
            std::string(to_string(r.kind)) + ',' + std::to_string(i) + ',' + detail::format_double(c.param) + ',';
        for (const auto& [name, s] : c.metrics) {
            out << prefix << "empirical," << name << ",," << detail::format_double(s.mean) << ','
                << detail::format_double(s.sd) << ',' << detail::format_double(s.median) << ','
                << detail::format_double(s.min) << ',' << detail::format_double(s.max);
            for (const auto& [q, v] : s.quantiles) out << ',' << detail::format_double(v);
            out << '\n';
        }
        for (const auto& [name, v] : c.predictors) {
            out << prefix << "predictor," << name << ',' << detail::format_double(v) << ",,,,,";
            for (std::size_t k = 0; k < qs.size(); ++k) out << ',';
            out << '\n';
        }
    }
}

// --- execution -----------------------------------------------------------

/// results[t] = fn(t) for t in [0, count), on up to `threads` workers.
/// If any call throws, the exception of the lowest failing index is
/// rethrown, so error reporting is scheduling-independent too.
template <class Result, class Fn>
std::vector<Result> parallel_map(std::int64_t count, int threads, Fn fn) {
    std::vector<Result> results(static_cast<std::size_t>(count));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
    std::atomic<std::int64_t> next{0};
    std::atomic<bool> failed{false};
    auto worker = [&] {
        for (;;) {
            const std::int64_t t = next.fetch_add(1);
            if (t >= count || failed.load()) return;
            try {
                results[static_cast<std::size_t>(t)] = fn(t);
            } catch (...) {
                errors[static_cast<std::size_t>(t)] = std::current_exception();
                failed.store(true);
            }
        }
    };
    const int nthreads = std::max(1, std::min<int>(threads, static_cast<int>(std::min<std::int64_t>(count, 256))));
    if (nthreads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return results;
}

namespace detail {

using TrialValues = std::vector<double>;

struct CellRun {
    std::vector<std::string> names;
    std::vector<TrialValues> perTrial;  // perTrial[t][k] = value of metric names[k]

    std::vector<double> column(std::size_t k) const {
        std::vector<double> v;
        v.reserve(perTrial.size());
        for (const auto& row : perTrial) v.push_back(row[k]);
        return v;
    }
    std::vector<double> column(const std::string& name) const {
        const auto it = std::find(names.begin(), names.end(), name);
        if (it == names.end()) throw ContractError("no metric '" + name + "'");
        return column(static_cast<std::size_t>(it - names.begin()));
    }
};

inline void summarize_into(CellRecord& cell, const CellRun& run, const std::vector<double>& qs) {
    for (std::size_t k = 0; k < run.names.size(); ++k) cell.metrics[run.names[k]] = summarize(run.column(k), qs);
}

inline constexpr double kIneqSlack = 1e-10;

inline void add_slope(TrialReport& report, const std::string& metric) {
    std::vector<std::pair<double, double>> pts;
    bool ok = report.cells.size() >= 3;
    for (const auto& c : report.cells) {
        const auto it = c.metrics.find(metric);
        if (it == c.metrics.end() || !(it->second.median > 0)) {
            ok = false;
            break;
        }
        pts.emplace_back(c.param, it->second.median);
    }
    report.slopes[metric] = ok ? fit_loglog_slope(pts) : std::numeric_limits<double>::quiet_NaN();
}

inline void add_slope_check(TrialReport& report, const TrialConfig& cfg) {
    if (!cfg.expectSlope) return;
    const auto& band = *cfg.expectSlope;
    if (!report.slopes.count(band.metric)) add_slope(report, band.metric);
    const double s = report.slopes.at(band.metric);
    std::ostringstream d;
    d << "slope of median " << band.metric << " vs " << report.paramName << " = " << format_double(s) << ", band ["
      << format_double(band.min) << ", " << format_double(band.max) << "]";
    report.checks.push_back({"slope:" + band.metric, s >= band.min && s <= band.max, d.str()});
}

inline void add_monotone_check(TrialReport& report, const std::string& metric) {
    bool ok = true;
    std::ostringstream d;
    d << "median " << metric << ":";
    for (std::size_t i = 0; i < report.cells.size(); ++i) {
        const double v = report.cells[i].metrics.at(metric).median;
        d << ' ' << format_double(v);
        if (i > 0 && !(v < report.cells[i - 1].metrics.at(metric).median)) ok = false;
    }
    report.checks.push_back({"monotone:" + metric, ok, d.str()});
}

inline TrialReport begin_report(const TrialConfig& cfg, const char* paramName) {
    cfg.validate();
    TrialReport r;
    r.kind = cfg.kind;
    r.paramName = paramName;
    r.configDigest = config_digest(cfg);
    r.masterSeed = cfg.masterSeed;
    return r;
}

inline std::string describe_trial(std::size_t cell, std::int64_t trial, std::uint64_t seed) {
    return "cell " + std::to_string(cell) + ", trial " + std::to_string(trial) + ", seed " + std::to_string(seed);
}

}  // namespace detail

/// Singular-value experiment: relative errors |sigma~_j / sigma_j - 1| of
/// S~(A) against the classical eps_j and the quadratic sqrt(j) eps_j^2.
inline TrialReport run_sparsify_sv(const TrialConfig& cfg, int threads = 1) {
    auto report = detail::begin_report(cfg, "m");
    const DenseMatrix a = cfg.matrix.build();
    const auto f = svd(a);
    const Index r = f.numericalRank;
    if (r < 1) throw ContractError("run_sparsify_sv: test matrix has rank 0");

    std::vector<std::string> names;
    for (Index j = 1; j <= r; ++j) names.push_back("relErrSigma" + std::to_string(j));
    names.insert(names.end(), {"normE", "nnz", "entryBoundRatio", "weylSlack"});

    for (std::size_t cell = 0; cell < cfg.grid.size(); ++cell) {
        const double m = cfg.grid[cell];
        const auto pred = sparsify_predictors(a, f, m);
        detail::CellRun run{names, {}};
        run.perTrial = parallel_map<detail::TrialValues>(cfg.trials, threads, [&](std::int64_t t) {
            const std::uint64_t seed = derive_seed(cfg.masterSeed, cell, static_cast<std::uint64_t>(t));
            const auto out = sparsify_bernoulli(a, m, seed, cfg.clamp);
            const Eigen::VectorXd sv = detail::singular_values(out.result.eigen());
            const double normE = detail::spectral_norm(out.error);
            detail::TrialValues v;
            double worstWeyl = 0;
            for (Index j = 0; j < r; ++j) {
                v.push_back(std::abs(sv(j) / f.sigma(j) - 1.0));
                const double gap = std::abs(sv(j) - f.sigma(j)) - normE;
                if (gap > detail::kIneqSlack * f.sigma(0)) {
                    throw InvariantViolation("Weyl violated at j = " + std::to_string(j + 1) + " (" +
                                             detail::describe_trial(cell, t, seed) + ")");
                }
                worstWeyl = std::max(worstWeyl, std::abs(sv(j) - f.sigma(j)) / std::max(normE, 1e-300));
            }
            const double ratio = entry_bound_ratio(a, out);
            if (ratio > 1.0 + detail::kIneqSlack) {
                throw InvariantViolation("entry bound |E_ij| <= (2/m)||A||_1 violated (" +
                                         detail::describe_trial(cell, t, seed) + ")");
            }
            v.insert(v.end(), {normE, static_cast<double>(out.nnz), ratio, normE > 0 ? worstWeyl : 0.0});
            return v;
        });
        report.trialsRun += cfg.trials;

        CellRecord rec;
        rec.param = m;
        detail::summarize_into(rec, run, cfg.quantiles);
        rec.predictors["R"] = pred.R;
        rec.predictors["r0"] = pred.r0;
        rec.predictors["h"] = pred.h.h;
        rec.predictors["hEps1"] = pred.hEps1;
        rec.predictors["eps1Squared"] = pred.eps1Squared;
        rec.predictors["eps1LogN"] = pred.eps1LogN;
        rec.predictors["normTail"] = pred.normTail.total;
        rec.predictors["feasibleMMax"] = pred.feasibleMMax;
        for (Index j = 1; j <= r; ++j) {
            const std::string s = std::to_string(j);
            rec.predictors["weylRel_" + s] = pred.weylRel[j - 1].value;
            rec.predictors["newSvRel_" + s] = pred.newSvRel[j - 1].value;
            const double med = rec.metrics.at("relErrSigma" + s).median;
            rec.ratios["relErrSigma" + s + "/weylRel_" + s] = med / pred.weylRel[j - 1].value;
            rec.ratios["relErrSigma" + s + "/newSvRel_" + s] = med / pred.newSvRel[j - 1].value;
        }
        rec.ratios["normE/normTail"] = rec.metrics.at("normE").median / pred.normTail.total;
        rec.flags["feasible"] = pred.feasible;
        rec.flags["lowRank"] = pred.lowRankRegime;
        rec.flags["epsBelowOne"] = pred.epsBelowOne;
        rec.flags["hBelowEps1"] = pred.h.h <= pred.eps.front();
        report.cells.push_back(std::move(rec));
    }

    for (Index j = 1; j <= r; ++j) detail::add_slope(report, "relErrSigma" + std::to_string(j));
    report.checks.push_back({"weyl", true, std::to_string(report.trialsRun) + " trials, no violation"});
    report.checks.push_back({"entryBound", true, std::to_string(report.trialsRun) + " trials, no violation"});
    detail::add_slope_check(report, cfg);
    if (cfg.expectMonotoneDecrease) detail::add_monotone_check(report, "relErrSigma1");
    return report;
}

/// Subspace experiment: sin angle between the leading j-dimensional
/// singular subspaces of A and S~(A), against Wedin's 2||E||/delta_j
/// (with the empirical ||E||) and the sqrt(j)(r/delta + R/sigma + R^2/(sigma delta)) shape.
inline TrialReport run_sparsify_subspace(const TrialConfig& cfg, int threads = 1) {
    auto report = detail::begin_report(cfg, "m");
    const DenseMatrix a = cfg.matrix.build();
    const auto f = svd(a);
    const Index r = f.numericalRank;
    const Index j = cfg.index > 0 ? cfg.index : 1;
    if (j > r) throw ContractError("run_sparsify_subspace: index exceeds the rank of the test matrix");
    const Subspace uj = leading_left(f, j);
    const Subspace vj = leading_right(f, j);
    const double deltaJ = spectral_gap(f, j);
    const double sigmaJ = f.sigma(j - 1);
    const std::vector<std::string> names{"sinU", "sinV", "normE", "wedinEmpirical", "nnz"};

    std::size_t halfWedinCells = 0;
    for (std::size_t cell = 0; cell < cfg.grid.size(); ++cell) {
        const double m = cfg.grid[cell];
        const auto pred = sparsify_predictors(a, f, m);
        detail::CellRun run{names, {}};
        run.perTrial = parallel_map<detail::TrialValues>(cfg.trials, threads, [&](std::int64_t t) {
            const std::uint64_t seed = derive_seed(cfg.masterSeed, cell, static_cast<std::uint64_t>(t));
            const auto out = sparsify_bernoulli(a, m, seed, cfg.clamp);
            const auto g = svd(out.result);
            const double normE = detail::spectral_norm(out.error);
            for (Index k = 0; k < std::min(r, g.size()); ++k) {
                if (std::abs(g.sigma(k) - f.sigma(k)) - normE > detail::kIneqSlack * f.sigma(0)) {
                    throw InvariantViolation("Weyl violated (" + detail::describe_trial(cell, t, seed) + ")");
                }
            }
            const double su = sin_angle(leading_left(g, j), uj);
            const double sv = sin_angle(leading_right(g, j), vj);
            if (!(su >= 0 && su <= 1 && sv >= 0 && sv <= 1)) {
                throw InvariantViolation("sin angle outside [0, 1] (" + detail::describe_trial(cell, t, seed) + ")");
            }
            return detail::TrialValues{su, sv, normE, wedin_bound(normE, deltaJ).value,
                                       static_cast<double>(out.nnz)};
        });
        report.trialsRun += cfg.trials;

        CellRecord rec;
        rec.param = m;
        detail::summarize_into(rec, run, cfg.quantiles);
        const double R = pred.R;
        rec.predictors["R"] = R;
        rec.predictors["deltaJ"] = deltaJ;
        rec.predictors["sigmaJ"] = sigmaJ;
        rec.predictors["wedinR"] = pred.wedin[j - 1].value;
        rec.predictors["newSubspace"] = pred.newSubspace[j - 1].value;
        const double sinMed = rec.metrics.at("sinU").median;
        const double wedinMed = rec.metrics.at("wedinEmpirical").median;
        rec.ratios["sinU/wedinEmpirical"] = sinMed / wedinMed;
        rec.ratios["sinU/newSubspace"] = sinMed / pred.newSubspace[j - 1].value;
        rec.flags["wedinRegime"] = R >= 2.0 * deltaJ;
        rec.flags["smallGapRegime"] = R >= 2.0 * deltaJ && R <= 0.3 * std::sqrt(deltaJ * sigmaJ);
        rec.flags["feasible"] = pred.feasible;
        rec.flags["sinBelowHalfWedin"] = sinMed <= 0.5 * wedinMed;
        if (rec.flags["sinBelowHalfWedin"]) ++halfWedinCells;
        report.cells.push_back(std::move(rec));
    }
    report.checks.push_back({"sinInUnitInterval", true, std::to_string(report.trialsRun) + " trials"});
    report.checks.push_back({"weyl", true, std::to_string(report.trialsRun) + " trials, no violation"});
    if (cfg.expectHalfWedinFraction) {
        const double frac = static_cast<double>(halfWedinCells) / static_cast<double>(report.cells.size());
        report.checks.push_back({"sinBelowHalfWedin", frac >= *cfg.expectHalfWedinFraction,
                                 std::to_string(halfWedinCells) + "/" + std::to_string(report.cells.size()) +
                                     " cells with median sin <= 0.5 * median(2||E||/delta_j)"});
    }
    detail::add_slope_check(report, cfg);
    return report;
}

/// Completion experiment over a grid of observation probabilities p:
/// spectral, Frobenius and per-column errors of A~_j = P_{U~_j} B~.
inline TrialReport run_completion(const TrialConfig& cfg, int threads = 1) {
    auto report = detail::begin_report(cfg, "p");
    const DenseMatrix a = cfg.matrix.build();
    const auto f = svd(a);
    const Index r = f.numericalRank;
    const Index j = cfg.index > 0 ? cfg.index : r;
    if (j > std::min(a.rows(), a.cols())) throw ContractError("run_completion: index out of range");
    const double amax = a.eigen().cwiseAbs().maxCoeff();
    const double rankFactor = std::sqrt(static_cast<double>(r + j));
    const std::vector<std::string> names{"errSpec",    "errFro",         "relErrSpec",    "col0Err",
                                         "maxColErr", "maxColBoundRatio", "observedFraction"};

    for (std::size_t cell = 0; cell < cfg.grid.size(); ++cell) {
        const double p = cfg.grid[cell];
        const auto pred = completion_predictors(a, f, p, cfg.sigma, cfg.eps);
        detail::CellRun run{names, {}};
        run.perTrial = parallel_map<detail::TrialValues>(cfg.trials, threads, [&](std::int64_t t) {
            const std::uint64_t seed = derive_seed(cfg.masterSeed, cell, static_cast<std::uint64_t>(t));
            const auto obs = observe(a, p, cfg.noiseKind, cfg.sigma, seed);
            const auto dec = decompose(a, obs);
            if (decomposition_residual_ulps(a, obs, dec) > 8.0) {
                throw InvariantViolation("H != E + F (" + detail::describe_trial(cell, t, seed) + ")");
            }
            if (dec.E.cwiseAbs().maxCoeff() > amax / p * (1.0 + detail::kIneqSlack)) {
                throw InvariantViolation("|E_ij| <= ||A||_max / p violated (" +
                                         detail::describe_trial(cell, t, seed) + ")");
            }
            const DenseMatrix est = estimate(obs, j);
            const Eigen::MatrixXd diff = a.eigen() - est.eigen();
            const double errSpec = detail::spectral_norm(diff);
            const double errFro = diff.norm();
            if (errFro > rankFactor * errSpec * (1.0 + detail::kIneqSlack) + 1e-300) {
                throw InvariantViolation("||A - A~||_2 <= sqrt(r + j) ||A - A~|| violated (" +
                                         detail::describe_trial(cell, t, seed) + ")");
            }
            double maxCol = 0, maxRatio = 0;
            for (Index k = 0; k < a.cols(); ++k) {
                const double e = diff.col(k).norm();
                maxCol = std::max(maxCol, e);
                maxRatio = std::max(maxRatio, e / pred.columnBound[static_cast<std::size_t>(k)]);
            }
            return detail::TrialValues{errSpec,
                                       errFro,
                                       errSpec / f.sigma(0),
                                       diff.col(0).norm(),
                                       maxCol,
                                       maxRatio,
                                       obs.mask.sum() / static_cast<double>(obs.mask.size())};
        });
        report.trialsRun += cfg.trials;

        CellRecord rec;
        rec.param = p;
        detail::summarize_into(rec, run, cfg.quantiles);
        rec.predictors["mathcalB"] = pred.mathcalB;
        rec.predictors["fullRecoveryBound"] = pred.fullRecoveryBound;
        rec.predictors["truncatedBound"] = pred.truncatedBound[static_cast<std::size_t>(std::min(j, r) - 1)];
        rec.predictors["truncatedPlusTail"] = pred.truncatedPlusTail[static_cast<std::size_t>(std::min(j, r) - 1)];
        rec.predictors["bestTruncation"] = static_cast<double>(pred.bestTruncation);
        rec.predictors["columnBound0"] = pred.columnBound.front();
        rec.predictors["thm51Rel"] = pred.thm51Rel.value;
        rec.predictors["rho1"] = pred.rho1;
        rec.predictors["rho2"] = pred.rho2;
        rec.predictors["T1"] = pred.T1;
        rec.ratios["errSpec/fullRecoveryBound"] = rec.metrics.at("errSpec").median / pred.fullRecoveryBound;
        rec.ratios["col0Err/columnBound0"] = rec.metrics.at("col0Err").median / pred.columnBound.front();
        rec.flags["thm51Condition"] = pred.thm51Condition;
        report.cells.push_back(std::move(rec));
    }
    detail::add_slope(report, "errSpec");
    report.checks.push_back({"decomposition", true, std::to_string(report.trialsRun) + " trials, H = E + F"});
    report.checks.push_back({"rankInequality", true, std::to_string(report.trialsRun) + " trials, no violation"});
    detail::add_slope_check(report, cfg);
    if (cfg.expectMonotoneDecrease) detail::add_monotone_check(report, "errSpec");
    return report;
}

/// Bilinear-form tails. For fixed unit x, y and E drawn from the chosen
/// side (sparsify: S~(A) - A; completion: the sampling part of B~ - A),
/// compares empirical P(|x^T E y| > sqrt(rho) t) with Chebyshev's t^-2 and
/// P(|x^T E y| > T t) with the Bernstein form 2 exp(-min(t^2, t)/2).
/// Also tracks ||U^T E V|| for the leading singular subspaces.
inline TrialReport run_concentration(const TrialConfig& cfg, int threads = 1) {
    const bool completionSide = cfg.side == "completion";
    auto report = detail::begin_report(cfg, completionSide ? "p" : "m");
    const DenseMatrix a = cfg.matrix.build();
    const auto f = svd(a);
    const Index r = f.numericalRank;

    Rng dirRng(derive_seed(cfg.matrix.seed, 0x5EC7u, 0x0D1Eu));
    Eigen::VectorXd x(a.rows()), y(a.cols());
    for (Index i = 0; i < x.size(); ++i) x(i) = dirRng.normal();
    for (Index i = 0; i < y.size(); ++i) y(i) = dirRng.normal();
    x.normalize();
    y.normalize();
    const double deltaInf = std::max(x.cwiseAbs().maxCoeff(), y.cwiseAbs().maxCoeff());
    const Eigen::MatrixXd xyAbs = x.cwiseAbs() * y.cwiseAbs().transpose();
    const Eigen::MatrixXd Ur = f.U.leftCols(r), Vr = f.V.leftCols(r);
    const double amax = a.eigen().cwiseAbs().maxCoeff();

    const std::vector<std::string> names{"xEy", "absXEy", "normUtEV"};
    bool allPass = true;
    for (std::size_t cell = 0; cell < cfg.grid.size(); ++cell) {
        const double param = cfg.grid[cell];
        double rho, L;
        if (completionSide) {
            validate_observation_probability(param);
            rho = amax * amax / param;
            L = amax / param;
        } else {
            const auto eb = entry_variance_bounds(a, param);
            rho = eb.rho;
            L = eb.L;
        }
        const double T = bilinear_T(rho, L, deltaInf);
        const double cap = xyAbs.sum() * L;

        detail::CellRun run{names, {}};
        run.perTrial = parallel_map<detail::TrialValues>(cfg.trials, threads, [&](std::int64_t t) {
            const std::uint64_t seed = derive_seed(cfg.masterSeed, cell, static_cast<std::uint64_t>(t));
            Eigen::MatrixXd e;
            if (completionSide) {
                e = decompose(a, observe(a, param, NoiseKind::none, 0.0, seed)).E;
            } else {
                e = sparsify_bernoulli(a, param, seed, cfg.clamp).error;
            }
            const double s = x.dot(e * y);
            if (std::abs(s) > cap * (1.0 + detail::kIneqSlack)) {
                throw InvariantViolation("|x^T E y| <= sum |x_i||y_j| L violated (" +
                                         detail::describe_trial(cell, t, seed) + ")");
            }
            const double uev = detail::spectral_norm(Ur.transpose() * e * Vr);
            return detail::TrialValues{s, std::abs(s), uev};
        });
        report.trialsRun += cfg.trials;

        CellRecord rec;
        rec.param = param;
        detail::summarize_into(rec, run, cfg.quantiles);
        const auto absS = run.column("absXEy");
        const auto uev = run.column("normUtEV");
        const double Td = static_cast<double>(cfg.trials);
        rec.predictors["rho"] = rho;
        rec.predictors["L"] = L;
        rec.predictors["T"] = T;
        rec.predictors["deltaInf"] = deltaInf;
        rec.predictors["pathwiseCap"] = cap;

        const double var = rec.metrics.at("xEy").sd * rec.metrics.at("xEy").sd;
        const double varLimit = rho * (1.0 + 5.0 / std::sqrt(Td));
        rec.ratios["var/rho"] = var / rho;
        rec.flags["varianceBelowRho"] = var <= varLimit;
        allPass = allPass && rec.flags["varianceBelowRho"];
        std::ostringstream detailText;
        detailText << "cell " << cell << ": var " << detail::format_double(var) << " <= "
                   << detail::format_double(varLimit);
        report.checks.push_back({"variance@" + detail::format_double(param), rec.flags["varianceBelowRho"],
                                 detailText.str()});

        for (double tl : cfg.tGrid) {
            const std::string ts = detail::format_double(tl);
            auto freq = [&](const std::vector<double>& v, double level) {
                std::size_t hits = 0;
                for (double s : v) hits += s > level ? 1 : 0;
                return static_cast<double>(hits) / Td;
            };
            const double cheb = std::min(1.0, 1.0 / (tl * tl));
            const double chebFreq = freq(absS, std::sqrt(rho) * tl);
            const double chebLimit = cheb + 3.0 * std::sqrt(cheb * (1.0 - cheb) / Td);
            const double bern = bilinear_tail(tl);
            const double bernFreq = freq(absS, T * tl);
            const double bernLimit = bern + 3.0 * std::sqrt(bern * (1.0 - bern) / Td);
            const double rr = static_cast<double>(r);
            const double netBound = std::min(1.0, std::pow(49.0, rr + 1.0) / (tl * tl));
            const double uevFreq = freq(uev, std::sqrt(rho) * tl);

            rec.predictors["chebyshev@" + ts] = cheb;
            rec.predictors["bernstein@" + ts] = bern;
            rec.predictors["netChebyshev@" + ts] = netBound;
            rec.ratios["tailFreq@" + ts] = chebFreq;
            rec.ratios["bernsteinFreq@" + ts] = bernFreq;
            rec.ratios["uevTailFreq@" + ts] = uevFreq;
            rec.flags["chebyshev@" + ts] = chebFreq <= chebLimit;
            rec.flags["bernstein@" + ts] = bernFreq <= bernLimit;
            rec.flags["netChebyshev@" + ts] = uevFreq <= netBound + 3.0 * std::sqrt(netBound * (1.0 - netBound) / Td);

            std::ostringstream c1, c2;
            c1 << "P(|x'Ey| > sqrt(rho) t) = " << detail::format_double(chebFreq) << " <= "
               << detail::format_double(chebLimit);
            c2 << "P(|x'Ey| > T t) = " << detail::format_double(bernFreq) << " <= " << detail::format_double(bernLimit);
            const std::string at = "@" + detail::format_double(param) + ",t=" + ts;
            report.checks.push_back({"chebyshev" + at, rec.flags["chebyshev@" + ts], c1.str()});
            report.checks.push_back({"bernstein" + at, rec.flags["bernstein@" + ts], c2.str()});
            report.checks.push_back({"netChebyshev" + at, rec.flags["netChebyshev@" + ts],
                                     "P(||U'EV|| > sqrt(rho) t) = " + detail::format_double(uevFreq)});
        }
        report.cells.push_back(std::move(rec));
    }
    report.checks.push_back({"pathwiseCap", true, std::to_string(report.trialsRun) + " trials, no violation"});
    (void)allPass;
    return report;
}

inline TrialReport run_experiment(const TrialConfig& cfg, int threads = 1) {
    switch (cfg.kind) {
        case ExperimentKind::sparsify_sv: return run_sparsify_sv(cfg, threads);
        case ExperimentKind::sparsify_subspace: return run_sparsify_subspace(cfg, threads);
        case ExperimentKind::completion_full:
        case ExperimentKind::completion_column: return run_completion(cfg, threads);
        case ExperimentKind::concentration: return run_concentration(cfg, threads);
    }
    throw ContractError("unknown experiment kind");
}

}  // namespace sparsecomp

#endif  // SPARSECOMP_MCVERIFY_HPP
