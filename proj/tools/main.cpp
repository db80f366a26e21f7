// sparsecomp command-line front end.
//
// Exit codes: 0 success, 1 I/O or parse error, 2 infeasible sampling budget,
// 3 acceptance failure (a verify check failed or a per-trial invariant broke).

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <sparsecomp/sparsecomp.hpp>

namespace sc = sparsecomp;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kIoError = 1, kInfeasible = 2, kAcceptance = 3 };

struct Common {
    std::optional<std::uint64_t> seed;
    int threads = 1;
    std::string format = "json";
    bool clamp = false;
};

std::uint64_t resolve_seed(const Common& c) {
    if (c.seed) return *c.seed;
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw sc::ParseError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return sc::detail::fnv1a_hex(ss.str());
}

json provenance(const json& params, std::uint64_t seed) {
    return {{"toolVersion", SPARSECOMP_VERSION}, {"configDigest", sc::detail::fnv1a_hex(params.dump())},
            {"masterSeed", seed}};
}

std::vector<std::string> provenance_comments(const json& prov) {
    return {"tool sparsecomp " + prov.at("toolVersion").get<std::string>(),
            "config " + prov.at("configDigest").get<std::string>(),
            "seed " + std::to_string(prov.at("masterSeed").get<std::uint64_t>())};
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw sc::ParseError("cannot write '" + path + "'");
    out << text;
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> v;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        v.push_back(sc::io::detail::parse_real(sc::io::detail::trim(tok), 0));
    }
    if (v.empty()) throw sc::ParseError("empty list '" + s + "'");
    return v;
}

// ---- gen ---------------------------------------------------------------

struct GenArgs {
    sc::Index rows = 64, cols = 64;
    std::string spectrum = "1";
    std::string out;
    std::optional<double> observeP;
    std::string noise = "none";
    double sigma = 0;
};

int cmd_gen(const GenArgs& g, const Common& c) {
    const std::uint64_t seed = resolve_seed(c);
    const auto spec = parse_list(g.spectrum);
    const sc::DenseMatrix a = sc::make_low_rank(g.rows, g.cols, spec, seed);
    const json params = {{"command", "gen"}, {"rows", g.rows}, {"cols", g.cols}, {"spectrum", spec}};
    const json prov = provenance(params, seed);
    if (!g.observeP) {
        sc::io::save_matrix(g.out, a.eigen(), provenance_comments(prov));
        std::cout << "wrote " << g.out << " (" << g.rows << "x" << g.cols << ", seed " << seed << ")\n";
        return kOk;
    }
    // observation set: the truth goes next to it as <stem>.truth.mtx
    const auto obs = sc::observe(a, *g.observeP, sc::noise_kind_from_string(g.noise), g.sigma,
                                 sc::derive_seed(seed, 1));
    sc::io::save_observations(g.out, obs);
    const std::filesystem::path base(g.out);
    const auto truth = base.parent_path() / (base.stem().string() + ".truth.mtx");
    sc::io::save_matrix(truth.string(), a.eigen(), provenance_comments(prov));
    std::cout << "wrote " << g.out << " and " << truth.string() << " (p " << *g.observeP << ", seed " << seed
              << ")\n";
    return kOk;
}

// ---- sparsify ----------------------------------------------------------

struct SparsifyArgs {
    std::string input;
    double m = 0;
    std::string method = "bernoulli";
    std::string out;
};

int cmd_sparsify(const SparsifyArgs& s, const Common& c) {
    const std::uint64_t seed = resolve_seed(c);
    const auto a = sc::io::load_matrix(s.input);
    const auto policy = c.clamp ? sc::ClampPolicy::clamp : sc::ClampPolicy::strict;
    const json params = {{"command", "sparsify"}, {"input", file_digest(s.input)}, {"m", s.m},
                         {"method", s.method}, {"clamp", c.clamp}};
    const json prov = provenance(params, seed);

    sc::SparsifyOutcome out = [&] {
        if (s.method == "replacement") {
            if (s.m < 1 || s.m != std::floor(s.m)) throw sc::ContractError("replacement sampling needs integer m >= 1");
            return sc::sparsify_replacement(a, static_cast<std::int64_t>(s.m), seed);
        }
        if (s.method != "bernoulli") throw sc::ContractError("unknown method '" + s.method + "'");
        return sc::sparsify_bernoulli(a, s.m, seed, policy);
    }();

    const double normE = sc::detail::spectral_norm(out.error);
    const double fmax = sc::feasible_m_max(a);
    json side = {{"input", s.input},
                 {"m", s.m},
                 {"method", s.method},
                 {"policy", sc::to_string(policy)},
                 {"nnz", out.nnz},
                 {"normE", normE},
                 {"feasibleMMax", fmax},
                 {"feasible", s.m <= fmax * (1.0 + 1e-12)},
                 {"clampedEntries", out.clampedEntries},
                 {"metadata", prov}};
    if (a.rows() >= a.cols()) {
        const auto f = sc::svd(a);
        side["eps1"] = sc::weyl_rel_bound(a, f, 1, s.m);
    } else {
        side["eps1"] = nullptr;  // R is stated for N >= n
    }
    if (out.clamp_warning()) {
        side["warning"] = std::to_string(out.clampedEntries) + " keep probabilities clamped to 1";
        std::cerr << "warning: " << side["warning"].get<std::string>() << '\n';
    }

    if (!s.out.empty()) {
        sc::io::save_matrix(s.out, out.result.eigen(), provenance_comments(prov));
        write_text(s.out + ".json", side.dump(2) + "\n");
    }
    if (c.format == "csv") {
        std::cout << "nnz,normE,eps1,feasible,clampedEntries\n"
                  << out.nnz << ',' << sc::detail::format_double(normE) << ','
                  << (side["eps1"].is_null() ? std::string() : sc::detail::format_double(side["eps1"].get<double>()))
                  << ',' << (side["feasible"].get<bool>() ? "true" : "false") << ',' << out.clampedEntries << '\n';
    } else {
        std::cout << side.dump(2) << '\n';
    }
    return kOk;
}

// ---- complete ----------------------------------------------------------

struct CompleteArgs {
    std::string obs;
    sc::Index j = 0;
    std::string truth;
    std::string out;
    double eps = 0.1;
};

/// argmin_j of truncatedBound_j + sigma_{j+1}. Without the truth the
/// spectrum of B~ stands in for that of A.
int cmd_complete(const CompleteArgs& s, const Common& c) {
    const auto obs = sc::io::load_observations(s.obs);
    const sc::DenseMatrix rescaled = sc::rescale(obs);
    std::optional<sc::DenseMatrix> truth;
    if (!s.truth.empty()) truth = sc::io::load_matrix(s.truth);
    if (truth && (truth->rows() != rescaled.rows() || truth->cols() != rescaled.cols())) {
        throw sc::ParseError(s.truth + ": shape does not match the observations");
    }

    const sc::DenseMatrix& reference = truth ? *truth : rescaled;
    const auto f = sc::svd(reference);
    const auto pred = sc::completion_predictors(reference, f, obs.p, obs.sigma, s.eps);
    const sc::Index j = s.j > 0 ? s.j : pred.bestTruncation;
    const sc::DenseMatrix est = sc::estimate_from_rescaled(rescaled, j);

    json params = {{"command", "complete"}, {"obs", file_digest(s.obs)}, {"j", j}, {"eps", s.eps}};
    if (truth) params["truth"] = file_digest(s.truth);
    const json prov = provenance(params, obs.seed);

    json report = sc::completion_report(pred);
    report["j"] = j;
    report["gapMinimizingJ"] = pred.bestTruncation;
    report["predictorSource"] = truth ? "truth" : "plugin";
    report["metadata"] = prov;

    if (truth) {
        const Eigen::MatrixXd diff = truth->eigen() - est.eigen();
        report["errSpec"] = sc::detail::spectral_norm(diff);
        report["errFro"] = diff.norm();
    }
    if (!s.out.empty()) {
        sc::io::save_matrix(s.out, est.eigen(), provenance_comments(prov));
        write_text(s.out + ".predictors.json", report.dump(2) + "\n");
        if (truth) {
            std::ostringstream csv;
            csv << "# tool " << SPARSECOMP_VERSION << " config " << prov["configDigest"].get<std::string>() << " seed "
                << obs.seed << '\n';
            csv << "column,error,bound\n";
            for (sc::Index k = 0; k < truth->cols(); ++k) {
                csv << k << ',' << sc::detail::format_double(sc::column_estimate_error(*truth, est, k)) << ','
                    << sc::detail::format_double(pred.columnBound[static_cast<std::size_t>(k)]) << '\n';
            }
            write_text(s.out + ".columns.csv", csv.str());
        }
    }
    std::cout << "gap-minimizing j = " << pred.bestTruncation << ", using j = " << j << '\n';
    if (c.format == "json") std::cout << report.dump(2) << '\n';
    return kOk;
}

// ---- bounds ------------------------------------------------------------

struct BoundsArgs {
    std::string input;
    std::optional<double> m;
    std::optional<double> p;
    std::string side = "sparsify";
    double sigma = 0;
    double eps = 0.1;
    std::string out;
};

void flatten(const json& j, const std::string& prefix, std::ostream& out) {
    if (j.is_object()) {
        for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, out);
    } else if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "." + std::to_string(i), out);
    } else {
        out << prefix << ',' << (j.is_string() ? j.get<std::string>() : j.dump()) << '\n';
    }
}

int cmd_bounds(const BoundsArgs& b, const Common& c) {
    const auto a = sc::io::load_matrix(b.input);
    const auto f = sc::svd(a);
    json params = {{"command", "bounds"}, {"input", file_digest(b.input)}, {"side", b.side}};
    json report;
    if (b.side == "sparsify") {
        if (!b.m) throw sc::ContractError("bounds --side sparsify needs --m");
        params["m"] = *b.m;
        report = sc::bound_report(sc::sparsify_predictors(a, f, *b.m));
    } else if (b.side == "completion") {
        if (!b.p) throw sc::ContractError("bounds --side completion needs --p");
        params["p"] = *b.p;
        params["sigma"] = b.sigma;
        params["eps"] = b.eps;
        report = sc::completion_report(sc::completion_predictors(a, f, *b.p, b.sigma, b.eps));
    } else {
        throw sc::ContractError("--side must be sparsify or completion");
    }
    report["metadata"] = provenance(params, 0);

    std::ostringstream text;
    if (c.format == "csv") {
        text << "# tool " << SPARSECOMP_VERSION << " config " << report["metadata"]["configDigest"].get<std::string>()
             << " seed 0\nname,value\n";
        flatten(report, "", text);
    } else {
        text << report.dump(2) << '\n';
    }
    if (b.out.empty()) {
        std::cout << text.str();
    } else {
        write_text(b.out, text.str());
    }
    return kOk;
}

// ---- verify ------------------------------------------------------------

struct VerifyArgs {
    std::string config;
    std::string out;
};

int cmd_verify(const VerifyArgs& v, const Common& c) {
    std::ifstream in(v.config);
    if (!in) throw sc::ParseError("cannot open '" + v.config + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw sc::ParseError(v.config + ": " + e.what());
    }
    sc::TrialConfig cfg;
    try {
        cfg = sc::trial_config_from_json(j);
    } catch (const json::exception& e) {
        throw sc::ParseError(v.config + ": " + e.what());
    } catch (const sc::ContractError& e) {
        throw sc::ParseError(v.config + ": " + e.what());
    }
    if (c.seed) cfg.masterSeed = *c.seed;
    if (c.clamp) cfg.clamp = sc::ClampPolicy::clamp;
    int threads = c.threads;
    if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

    const auto report = sc::run_experiment(cfg, threads);
    const std::string jsonText = sc::to_json(report).dump(2) + "\n";
    std::ostringstream csv;
    sc::write_csv(csv, report);
    if (!v.out.empty()) {
        write_text(v.out + ".json", jsonText);
        write_text(v.out + ".csv", csv.str());
    }
    std::cout << (c.format == "csv" ? csv.str() : jsonText);
    for (const auto& chk : report.checks) {
        std::cerr << (chk.passed ? "PASS " : "FAIL ") << chk.name << ": " << chk.detail << '\n';
    }
    return report.all_passed() ? kOk : kAcceptance;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sparsecomp: matrix sparsification and completion experiments"};
    app.set_version_flag("--version", std::string(SPARSECOMP_VERSION));
    app.require_subcommand(1);

    Common common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--seed", common.seed, "master seed (random if omitted; always recorded)");
        sub->add_option("--threads", common.threads, "worker threads (0 = all cores)");
        sub->add_option("--format", common.format, "stdout format")->check(CLI::IsMember({"json", "csv"}));
        sub->add_flag("--clamp", common.clamp, "cap keep probabilities at 1 instead of failing");
    };

    GenArgs gen;
    auto* g = app.add_subcommand("gen", "generate a test matrix U diag(s) V^T with Haar factors");
    g->add_option("--rows", gen.rows)->required();
    g->add_option("--cols", gen.cols)->required();
    g->add_option("--spectrum", gen.spectrum, "comma-separated singular values, non-increasing")->required();
    g->add_option("-o,--out", gen.out, ".mtx or .csv; .json with --observe-p")->required();
    g->add_option("--observe-p", gen.observeP, "also sample an observation set with this probability");
    g->add_option("--noise", gen.noise)->check(CLI::IsMember({"none", "gaussian", "boundedUniform"}));
    g->add_option("--sigma", gen.sigma);
    add_common(g);

    SparsifyArgs sp;
    auto* s = app.add_subcommand("sparsify", "sparsify a matrix");
    s->add_option("input", sp.input)->required();
    s->add_option("-m,--m", sp.m, "sampling budget")->required();
    s->add_option("--method", sp.method)->check(CLI::IsMember({"bernoulli", "replacement"}));
    s->add_option("-o,--out", sp.out, "result matrix; a JSON sidecar goes to <out>.json");
    add_common(s);

    CompleteArgs cp;
    auto* cm = app.add_subcommand("complete", "estimate a low-rank matrix from an observation set");
    cm->add_option("obs", cp.obs, "observation params JSON")->required();
    cm->add_option("-j,--j", cp.j, "rank of the projection (default: gap-minimizing j)");
    cm->add_option("--truth", cp.truth, "true matrix, enables error reports");
    cm->add_option("--eps", cp.eps);
    cm->add_option("-o,--out", cp.out);
    add_common(cm);

    BoundsArgs bd;
    auto* b = app.add_subcommand("bounds", "evaluate predictors for a matrix");
    b->add_option("input", bd.input)->required();
    b->add_option("--m", bd.m);
    b->add_option("--p", bd.p);
    b->add_option("--side", bd.side)->check(CLI::IsMember({"sparsify", "completion"}));
    b->add_option("--sigma", bd.sigma);
    b->add_option("--eps", bd.eps);
    b->add_option("-o,--out", bd.out);
    add_common(b);

    VerifyArgs vf;
    auto* v = app.add_subcommand("verify", "run a Monte-Carlo experiment from a config file");
    v->add_option("config", vf.config)->required();
    v->add_option("-o,--out", vf.out, "write <out>.json and <out>.csv");
    add_common(v);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kIoError;
    }

    try {
        if (*g) return cmd_gen(gen, common);
        if (*s) return cmd_sparsify(sp, common);
        if (*cm) return cmd_complete(cp, common);
        if (*b) return cmd_bounds(bd, common);
        if (*v) return cmd_verify(vf, common);
    } catch (const sc::FeasibilityError& e) {
        std::cerr << "infeasible: " << e.what() << '\n';
        return kInfeasible;
    } catch (const sc::InvariantViolation& e) {
        std::cerr << "invariant violated: " << e.what() << '\n';
        return kAcceptance;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIoError;
    }
    return kIoError;
}
