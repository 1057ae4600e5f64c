#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "strangeres/experiments.hpp"

namespace {

int run(sr::ExperimentKind kind, const std::string& config_path,
        std::optional<std::uint64_t> seed_flag, std::optional<std::string> out_dir,
        std::optional<std::string> preset) {
    nlohmann::json j = nlohmann::json::object();
    if (!config_path.empty()) {
        std::ifstream is(config_path);
        if (!is) {
            std::cerr << "error: cannot open config " << config_path << "\n";
            return 1;
        }
        is >> j;
    }
    j["kind"] = kind == sr::ExperimentKind::reconstruct   ? "reconstruct"
                : kind == sr::ExperimentKind::vdp_sweep   ? "vdp_sweep"
                : kind == sr::ExperimentKind::forecast    ? "forecast"
                                                          : "diagnose";
    if (preset) j["preset"] = *preset;

    // seed precedence: flag > env > config
    if (const char* env = std::getenv("STRANGE_RESERVOIR_SEED"); env && !seed_flag)
        seed_flag = std::strtoull(env, nullptr, 10);
    if (seed_flag) {
        if (!j.contains("reservoir")) j["reservoir"] = nlohmann::json::object();
        j["reservoir"]["seed"] = *seed_flag;
    }
    if (out_dir) j["out_dir"] = *out_dir;

    sr::ExperimentConfig cfg = sr::parse_config(j);

    if (kind == sr::ExperimentKind::diagnose) {
        const auto reports = sr::run_diagnostics_suite(cfg);
        bool all = true;
        for (const auto& r : reports) {
            std::cout << r.text_line() << "\n";
            all = all && r.passed;
        }
        return all ? 0 : 2;
    }

    sr::ExperimentResult result;
    switch (kind) {
        case sr::ExperimentKind::reconstruct: result = sr::run_reconstruct(cfg); break;
        case sr::ExperimentKind::vdp_sweep: result = sr::run_vdp_sweep(cfg); break;
        case sr::ExperimentKind::forecast: result = sr::run_forecast(cfg); break;
        default: break;
    }
    for (const auto& [name, value] : result.metrics)
        std::cout << name << " = " << sr::format_double(value) << "\n";
    for (const auto& p : result.paths) std::cout << "wrote " << p.string() << "\n";
    std::cout << (result.passed ? "PASS" : "FAIL") << " ("
              << sr::format_double(result.wall_seconds) << " s)\n";
    return result.passed ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Random linear reservoir embeddings: reconstruction, filtering, forecasting"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir, preset;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON experiment config");
        sub->add_option("--seed", seed, "reservoir seed (overrides env and config)");
        sub->add_option("--out-dir", out_dir, "output directory");
        sub->add_option("--preset", preset, "desk|paper")
            ->check(CLI::IsMember({"desk", "paper"}));
    };

    auto* rec = app.add_subcommand("reconstruct", "attractor reconstruction pipeline");
    auto* vdp = app.add_subcommand("vdp-sweep", "Van der Pol damping sweep");
    auto* fc = app.add_subcommand("forecast", "Lorenz filtering/forecasting with noisy input");
    auto* diag = app.add_subcommand("diagnose", "embedding hypothesis checks");
    for (auto* sub : {rec, vdp, fc, diag}) add_common(sub);

    CLI11_PARSE(app, argc, argv);

    try {
        sr::ExperimentKind kind = sr::ExperimentKind::reconstruct;
        if (vdp->parsed()) kind = sr::ExperimentKind::vdp_sweep;
        if (fc->parsed()) kind = sr::ExperimentKind::forecast;
        if (diag->parsed()) kind = sr::ExperimentKind::diagnose;
        return run(kind, config_path, seed, out_dir, preset);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
