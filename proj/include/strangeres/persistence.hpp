#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "strangeres/linalg.hpp"
#include "strangeres/readout.hpp"
#include "strangeres/reservoir.hpp"

namespace sr {

struct PersistenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct VersionError : PersistenceError {
    using PersistenceError::PersistenceError;
};
struct ChecksumError : PersistenceError {
    using PersistenceError::PersistenceError;
};
struct InvariantError : PersistenceError {
    using PersistenceError::PersistenceError;
};

namespace detail {

constexpr int kFormatVersion = 1;

inline std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw PersistenceError("cannot open for writing: " + tmp.string());
        os << content;
        if (!os.good()) throw PersistenceError("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline nlohmann::json envelope(const std::string& kind, nlohmann::json payload) {
    return {{"version", kFormatVersion},
            {"kind", kind},
            {"checksum", fnv1a64(payload.dump())},
            {"payload", std::move(payload)}};
}

inline nlohmann::json open_envelope(const std::filesystem::path& path, const std::string& kind) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw PersistenceError("cannot open: " + path.string());
    nlohmann::json env;
    try {
        is >> env;
    } catch (const nlohmann::json::exception& e) {
        throw PersistenceError("malformed envelope in " + path.string() + ": " + e.what());
    }
    if (!env.contains("version") || env["version"].get<int>() != kFormatVersion)
        throw VersionError("unsupported format version in " + path.string());
    if (env.value("kind", "") != kind)
        throw PersistenceError("expected kind '" + kind + "' in " + path.string());
    const auto stored = env.value("checksum", std::uint64_t{0});
    if (stored != fnv1a64(env["payload"].dump()))
        throw ChecksumError("checksum mismatch in " + path.string());
    return env["payload"];
}

inline nlohmann::json matrix_to_json(const Matrix& m) {
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"entries", m.data()}};
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
    Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    const auto entries = j.at("entries").get<std::vector<double>>();
    if (entries.size() != m.rows() * m.cols())
        throw InvariantError("matrix entry count does not match dimensions");
    m.data() = entries;
    return m;
}

}  // namespace detail

inline void save(const ReservoirSystem& res, const std::filesystem::path& path) {
    nlohmann::json payload{{"N", res.N},
                           {"A", detail::matrix_to_json(res.A)},
                           {"C", res.C},
                           {"rho_hat", res.rho_hat},
                           {"seed", res.seed},
                           {"recipe", to_string(res.recipe)},
                           {"scale", res.scale}};
    detail::write_atomic(path, detail::envelope("reservoir", std::move(payload)).dump(2));
}

inline ReservoirSystem load_reservoir(const std::filesystem::path& path) {
    const auto p = detail::open_envelope(path, "reservoir");
    ReservoirSystem res;
    res.N = p.at("N").get<std::size_t>();
    res.A = detail::matrix_from_json(p.at("A"));
    res.C = p.at("C").get<Vector>();
    res.rho_hat = p.at("rho_hat").get<double>();
    res.seed = p.at("seed").get<std::uint64_t>();
    res.scale = p.value("scale", 0.0);
    const std::string recipe = p.at("recipe").get<std::string>();
    if (recipe == "uniform_normalized")
        res.recipe = Recipe::uniform_normalized;
    else if (recipe == "haar_scaled")
        res.recipe = Recipe::haar_scaled;
    else if (recipe == "takens_shift")
        res.recipe = Recipe::takens_shift;
    else
        res.recipe = Recipe::custom;

    if (!res.A.square() || res.A.rows() != res.N || res.C.size() != res.N)
        throw InvariantError("reservoir dimensions inconsistent in " + path.string());
    double rho;
    try {
        rho = spectral_radius(res.A, 1e-10);
    } catch (const NotConvergedError& e) {
        rho = e.last_estimate;
    }
    if (std::abs(rho - res.rho_hat) > 1e-9)
        throw InvariantError("stored rho_hat disagrees with recomputed spectral radius in " +
                             path.string());
    return res;
}

inline void save(const RidgeModel& model, const std::filesystem::path& path) {
    nlohmann::json payload{
        {"feature_kind", model.fm.kind == FeatureMap::Kind::linear ? "linear" : "polynomial"},
        {"input_dim", model.fm.input_dim},
        {"degree", model.fm.degree},
        {"weights", model.weights},
        {"lambda", model.lambda}};
    detail::write_atomic(path, detail::envelope("ridge", std::move(payload)).dump(2));
}

inline RidgeModel load_ridge(const std::filesystem::path& path) {
    const auto p = detail::open_envelope(path, "ridge");
    RidgeModel model;
    const std::string kind = p.at("feature_kind").get<std::string>();
    const auto n = p.at("input_dim").get<std::size_t>();
    model.fm = kind == "linear" ? FeatureMap::linear(n)
                                : FeatureMap::polynomial(n, p.at("degree").get<std::size_t>());
    model.weights = p.at("weights").get<Vector>();
    model.lambda = p.at("lambda").get<double>();
    if (model.weights.size() != model.fm.feature_dim())
        throw InvariantError("ridge weight count does not match feature dimension");
    for (double w : model.weights)
        if (!std::isfinite(w)) throw InvariantError("non-finite ridge weight in " + path.string());
    return model;
}

inline void save(const MlpModel& model, const std::filesystem::path& path) {
    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t l = 0; l < model.W.size(); ++l)
        layers.push_back({{"W", detail::matrix_to_json(model.W[l])}, {"b", model.b[l]}});
    nlohmann::json payload{{"sizes", model.sizes},
                           {"layers", std::move(layers)},
                           {"z_min", model.z_min},
                           {"z_max", model.z_max}};
    detail::write_atomic(path, detail::envelope("mlp", std::move(payload)).dump(2));
}

inline MlpModel load_mlp(const std::filesystem::path& path) {
    const auto p = detail::open_envelope(path, "mlp");
    MlpModel model;
    model.sizes = p.at("sizes").get<std::vector<std::size_t>>();
    model.z_min = p.at("z_min").get<double>();
    model.z_max = p.at("z_max").get<double>();
    for (const auto& layer : p.at("layers")) {
        model.W.push_back(detail::matrix_from_json(layer.at("W")));
        model.b.push_back(layer.at("b").get<Vector>());
    }
    if (model.W.size() + 1 != model.sizes.size())
        throw InvariantError("mlp layer count inconsistent in " + path.string());
    for (std::size_t l = 0; l < model.W.size(); ++l)
        if (model.W[l].rows() != model.sizes[l + 1] || model.W[l].cols() != model.sizes[l] ||
            model.b[l].size() != model.sizes[l + 1])
            throw InvariantError("mlp layer shape inconsistent in " + path.string());
    return model;
}

inline void save(const StateTrajectory& traj, const std::filesystem::path& path) {
    nlohmann::json states = nlohmann::json::array();
    for (const auto& s : traj.states) states.push_back(s);
    nlohmann::json payload{{"states", std::move(states)},
                           {"inputs", traj.inputs},
                           {"washout_len", traj.washout_len},
                           {"dt", traj.dt}};
    detail::write_atomic(path, detail::envelope("trajectory", std::move(payload)).dump(2));
}

inline StateTrajectory load_trajectory(const std::filesystem::path& path) {
    const auto p = detail::open_envelope(path, "trajectory");
    StateTrajectory traj;
    for (const auto& s : p.at("states")) traj.states.push_back(s.get<Vector>());
    traj.inputs = p.at("inputs").get<std::vector<double>>();
    traj.washout_len = p.at("washout_len").get<std::size_t>();
    traj.dt = p.at("dt").get<double>();
    if (traj.states.size() != traj.inputs.size())
        throw InvariantError("trajectory state/input length mismatch in " + path.string());
    if (traj.washout_len >= traj.states.size())
        throw InvariantError("trajectory washout exceeds length in " + path.string());
    return traj;
}

}  // namespace sr
