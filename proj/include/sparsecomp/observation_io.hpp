#ifndef SPARSECOMP_OBSERVATION_IO_HPP
#define SPARSECOMP_OBSERVATION_IO_HPP

// ObservationSet on disk: a params JSON next to two MatrixMarket files,
// one with the observed values and one with the 0/1 mask. The mask file is
// needed because an observed entry may legitimately be zero.
//
//   {
//     "schema": "sparsecomp.observations/1",
//     "rows": 60, "cols": 60, "p": 0.5,
//     "noise": {"kind": "gaussian", "sigma": 0.05},
//     "seed": 17,
//     "values": "obs.values.mtx",
//     "mask": "obs.mask.mtx"
//   }
//
// File names are resolved relative to the JSON file. Noise draws are not
// stored; a loaded set has noise == 0.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "completion.hpp"
#include "matrix_io.hpp"

namespace sparsecomp::io {

inline constexpr const char* kObservationSchema = "sparsecomp.observations/1";

inline void save_observations(const std::string& jsonPath, const ObservationSet& obs) {
    namespace fs = std::filesystem;
    const fs::path base(jsonPath);
    const std::string stem = base.stem().string();
    const fs::path valuesPath = base.parent_path() / (stem + ".values.mtx");
    const fs::path maskPath = base.parent_path() / (stem + ".mask.mtx");
    const std::vector<std::string> comments{"observations p " + detail::format_real(obs.p),
                                            "seed " + std::to_string(obs.seed)};
    save_matrix(valuesPath.string(), obs.observed, comments);
    save_matrix(maskPath.string(), obs.mask, comments);

    nlohmann::json j;
    j["schema"] = kObservationSchema;
    j["rows"] = obs.rows();
    j["cols"] = obs.cols();
    j["p"] = obs.p;
    j["noise"] = {{"kind", to_string(obs.noiseKind)}, {"sigma", obs.sigma}};
    j["seed"] = obs.seed;
    j["values"] = valuesPath.filename().string();
    j["mask"] = maskPath.filename().string();
    std::ofstream out(jsonPath);
    if (!out) throw ParseError("cannot write '" + jsonPath + "'");
    out << j.dump(2) << '\n';
}

inline ObservationSet load_observations(const std::string& jsonPath) {
    namespace fs = std::filesystem;
    std::ifstream in(jsonPath);
    if (!in) throw ParseError("cannot open '" + jsonPath + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(jsonPath + ": " + e.what(), 0);
    }
    try {
        if (j.at("schema").get<std::string>() != kObservationSchema) {
            throw ParseError(jsonPath + ": unsupported schema '" + j.at("schema").get<std::string>() + "'");
        }
        const fs::path dir = fs::path(jsonPath).parent_path();
        const DenseMatrix values = load_matrix((dir / j.at("values").get<std::string>()).string());
        const DenseMatrix mask = load_matrix((dir / j.at("mask").get<std::string>()).string());
        const auto rows = j.at("rows").get<Index>();
        const auto cols = j.at("cols").get<Index>();
        if (values.rows() != rows || values.cols() != cols || mask.rows() != rows || mask.cols() != cols) {
            throw ParseError(jsonPath + ": matrix files do not match the declared shape");
        }
        if (((mask.eigen().array() != 0.0) && (mask.eigen().array() != 1.0)).any()) {
            throw ParseError(jsonPath + ": mask entries must be 0 or 1");
        }
        if (((mask.eigen().array() == 0.0) && (values.eigen().array() != 0.0)).any()) {
            throw ParseError(jsonPath + ": value present at an unobserved position");
        }
        ObservationSet obs;
        obs.observed = values.eigen();
        obs.mask = mask.eigen();
        obs.noise = Eigen::MatrixXd::Zero(rows, cols);
        obs.p = j.at("p").get<double>();
        validate_observation_probability(obs.p);
        const auto& noise = j.at("noise");
        obs.noiseKind = noise_kind_from_string(noise.at("kind").get<std::string>());
        obs.sigma = noise.at("sigma").get<double>();
        obs.seed = j.value("seed", std::uint64_t{0});
        return obs;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(jsonPath + ": " + e.what());
    } catch (const ContractError& e) {
        throw ParseError(jsonPath + ": " + e.what());
    }
}

}  // namespace sparsecomp::io

#endif  // SPARSECOMP_OBSERVATION_IO_HPP
