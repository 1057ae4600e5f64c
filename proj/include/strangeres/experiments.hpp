#pragma once

#include <array>
#include <charconv>
#include <chrono>
#include <functional>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "strangeres/diagnostics.hpp"
#include "strangeres/dynsys.hpp"
#include "strangeres/linalg.hpp"
#include "strangeres/persistence.hpp"
#include "strangeres/readout.hpp"
#include "strangeres/reservoir.hpp"

namespace sr {

// ---------- formatting / output helpers ----------

inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// RFC-4180 CSV with a header row; all values shortest-round-trip doubles.
inline void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("write_csv: cannot open " + path.string());
    for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
    os << "\r\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_double(row[i]);
        os << "\r\n";
    }
}

inline std::vector<std::vector<double>> read_csv(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_csv: cannot open " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    bool header = true;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (header) {
            header = false;
            continue;
        }
        std::vector<double> row;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            const std::size_t comma = line.find(',', pos);
            const std::string cell =
                line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
            double v = 0.0;
            std::from_chars(cell.data(), cell.data() + cell.size(), v);
            row.push_back(v);
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

// Static SVG scatter plot. Early points are rendered purple, late points
// yellow, via a two-color linear gradient over the point index.
inline void write_svg_scatter(const std::filesystem::path& path,
                              const std::vector<std::array<double, 2>>& points,
                              const std::string& title,
                              const std::vector<int>* group = nullptr) {
    const double W = 800, H = 600, margin = 50;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& p : points) {
        xmin = std::min(xmin, p[0]);
        xmax = std::max(xmax, p[0]);
        ymin = std::min(ymin, p[1]);
        ymax = std::max(ymax, p[1]);
    }
    if (points.empty()) xmin = ymin = 0, xmax = ymax = 1;
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;

    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("write_svg_scatter: cannot open " + path.string());
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << W
       << "\" height=\"" << H << "\">\n"
       << "<!-- color: purple (start) to yellow (end) two-color gradient over time index -->\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << "<text x=\"20\" y=\"30\" font-size=\"18\">" << title << "</text>\n";
    const char* group_colors[] = {"#440154", "#3b528b", "#21918c", "#5ec962", "#fde725"};
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double fx = (points[i][0] - xmin) / (xmax - xmin);
        const double fy = (points[i][1] - ymin) / (ymax - ymin);
        const double px = margin + fx * (W - 2 * margin);
        const double py = H - margin - fy * (H - 2 * margin);
        std::string color;
        if (group) {
            color = group_colors[static_cast<std::size_t>((*group)[i]) % 5];
        } else {
            const double t = points.size() > 1 ? double(i) / double(points.size() - 1) : 0.0;
            const int rr = static_cast<int>(68 + t * (253 - 68));
            const int gg = static_cast<int>(1 + t * (231 - 1));
            const int bb = static_cast<int>(84 + t * (37 - 84));
            char hex[8];
            std::snprintf(hex, sizeof(hex), "#%02x%02x%02x", rr, gg, bb);
            color = hex;
        }
        os << "<circle cx=\"" << px << "\" cy=\"" << py << "\" r=\"1.5\" fill=\"" << color
           << "\"/>\n";
    }
    os << "</svg>\n";
}

// ---------- small analysis helpers ----------

// 2-means between/within cluster separation ratio on a point cloud.
inline double two_means_separation(const std::vector<Vector>& pts, std::size_t iters = 50) {
    if (pts.size() < 4) return 0.0;
    const std::size_t d = pts[0].size();
    // seed with the two most distant of a coarse subsample
    std::size_t a = 0, b = 1;
    double best = -1.0;
    const std::size_t stride = std::max<std::size_t>(1, pts.size() / 64);
    for (std::size_t i = 0; i < pts.size(); i += stride)
        for (std::size_t j = i + stride; j < pts.size(); j += stride) {
            const double dist = norm2(pts[i] - pts[j]);
            if (dist > best) {
                best = dist;
                a = i;
                b = j;
            }
        }
    Vector c1 = pts[a], c2 = pts[b];
    std::vector<int> assign(pts.size(), 0);
    for (std::size_t it = 0; it < iters; ++it) {
        bool changed = false;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const int want = norm2(pts[i] - c1) <= norm2(pts[i] - c2) ? 0 : 1;
            if (want != assign[i]) {
                assign[i] = want;
                changed = true;
            }
        }
        Vector n1(d, 0.0), n2(d, 0.0);
        std::size_t k1 = 0, k2 = 0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (assign[i] == 0) {
                n1 = n1 + pts[i];
                ++k1;
            } else {
                n2 = n2 + pts[i];
                ++k2;
            }
        }
        if (k1 == 0 || k2 == 0) return 0.0;
        c1 = (1.0 / double(k1)) * n1;
        c2 = (1.0 / double(k2)) * n2;
        if (!changed) break;
    }
    double within = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i)
        within += std::pow(norm2(pts[i] - (assign[i] == 0 ? c1 : c2)), 2);
    within = std::sqrt(within / double(pts.size()));
    const double between = norm2(c1 - c2);
    return within > 0.0 ? between / within : 0.0;
}

// Largest angular gap (degrees) of a planar loop around its centroid.
inline double max_angular_gap_deg(const std::vector<Vector>& pts) {
    if (pts.size() < 3) return 360.0;
    double cx = 0.0, cy = 0.0;
    for (const auto& p : pts) {
        cx += p[0];
        cy += p[1];
    }
    cx /= double(pts.size());
    cy /= double(pts.size());
    // standardize each component so a flat ellipse (principal components of
    // very different scale) is judged by its loop topology, not its aspect
    double sx = 0.0, sy = 0.0;
    for (const auto& p : pts) {
        sx += (p[0] - cx) * (p[0] - cx);
        sy += (p[1] - cy) * (p[1] - cy);
    }
    sx = std::sqrt(sx / double(pts.size()));
    sy = std::sqrt(sy / double(pts.size()));
    if (sx == 0.0 || sy == 0.0) return 360.0;
    std::vector<double> angles;
    angles.reserve(pts.size());
    for (const auto& p : pts) angles.push_back(std::atan2((p[1] - cy) / sy, (p[0] - cx) / sx));
    std::sort(angles.begin(), angles.end());
    double gap = angles.front() + 2.0 * M_PI - angles.back();
    for (std::size_t i = 1; i < angles.size(); ++i) gap = std::max(gap, angles[i] - angles[i - 1]);
    return gap * 180.0 / M_PI;
}

// GS truncation depth for the experiments: the tail-bound choice capped so
// backward orbits of the chaotic benchmarks stay on-attractor.
inline std::size_t series_depth(const ReservoirSystem& res, double sup_omega, double tol = 1e-10,
                                std::size_t cap = 120) {
    std::size_t J;
    try {
        J = effective_truncation(res, sup_omega, tol);
    } catch (const ConstructionError&) {
        J = cap;
    }
    return std::min(J, cap);
}

// ---------- configuration ----------

enum class ExperimentKind { reconstruct, vdp_sweep, forecast, diagnose };

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::reconstruct;
    DynamicalSystem system = DynamicalSystem::lorenz();
    Vector initial_condition{0.0, 1.0, 1.05};
    double total_time = 40.0;
    double washout_time = 20.0;
    Recipe recipe = Recipe::uniform_normalized;
    std::size_t N = 7;
    std::uint64_t seed = 1;
    double scale = 0.9;  // haar_scaled only
    ObservationFn observation = ObservationFn::coordinate(0);
    double noise_variance = 0.25;                    // forecast
    std::string readout_type = "ridge";              // forecast: "ridge" | "mlp"
    std::size_t ridge_degree = 2;
    double ridge_lambda = 1e-8;
    std::vector<std::size_t> mlp_hidden{20, 20, 20};
    TrainConfig train;
    std::vector<double> mu_values{0.5, 1.0, 1.5, 2.0, 2.5};  // vdp_sweep
    std::string preset = "desk";
    std::filesystem::path out_dir = "out";

    void validate() const {
        if (!(washout_time < total_time))
            throw ConfigError("config: washout_time must be < total_time");
        if (initial_condition.size() != system.dim())
            throw ConfigError("config: initial condition dimension mismatch");
        if (!(system.h > 0.0)) throw ConfigError("config: time step must be > 0");
        if (N < 1) throw ConfigError("config: N must be >= 1");
    }
};

inline ExperimentConfig parse_config(const nlohmann::json& j) {
    ExperimentConfig cfg;
    const std::string kind = j.value("kind", "reconstruct");
    if (kind == "reconstruct")
        cfg.kind = ExperimentKind::reconstruct;
    else if (kind == "vdp_sweep")
        cfg.kind = ExperimentKind::vdp_sweep;
    else if (kind == "forecast")
        cfg.kind = ExperimentKind::forecast;
    else if (kind == "diagnose")
        cfg.kind = ExperimentKind::diagnose;
    else
        throw ConfigError("config: unknown kind '" + kind + "'");

    const auto sys = j.value("system", nlohmann::json::object());
    const std::string name = sys.value("name", "lorenz");
    const double h = j.value("dt", 0.01);
    if (name == "rossler")
        cfg.system = DynamicalSystem::rossler(h);
    else if (name == "vanderpol")
        cfg.system = DynamicalSystem::vanderpol(sys.value("mu", 1.0), h);
    else if (name == "lorenz")
        cfg.system = DynamicalSystem::lorenz(h);
    else
        throw ConfigError("config: unknown system '" + name + "'");

    if (j.contains("initial_condition"))
        cfg.initial_condition = j["initial_condition"].get<Vector>();
    else
        cfg.initial_condition = name == "rossler"     ? Vector{2.0, 1.0, 5.0}
                                : name == "vanderpol" ? Vector{-4.0, 5.0}
                                                      : Vector{0.0, 1.0, 1.05};
    cfg.total_time = j.value("total_time", cfg.total_time);
    cfg.washout_time = j.value("washout_time", cfg.washout_time);

    const auto res = j.value("reservoir", nlohmann::json::object());
    const std::string recipe = res.value("recipe", "uniform_normalized");
    if (recipe == "uniform_normalized")
        cfg.recipe = Recipe::uniform_normalized;
    else if (recipe == "haar_scaled")
        cfg.recipe = Recipe::haar_scaled;
    else if (recipe == "takens_shift")
        cfg.recipe = Recipe::takens_shift;
    else
        throw ConfigError("config: unknown recipe '" + recipe + "'");
    cfg.N = res.value("N", cfg.N);
    cfg.seed = res.value("seed", cfg.seed);
    cfg.scale = res.value("scale", cfg.scale);

    const auto obs = j.value("observation", nlohmann::json::object());
    const std::string okind = obs.value("kind", "coordinate");
    if (okind == "coordinate")
        cfg.observation = ObservationFn::coordinate(obs.value("index", 0));
    else if (okind == "linear")
        cfg.observation = ObservationFn::linear(obs.at("weights").get<Vector>());
    else
        throw ConfigError("config: unknown observation kind '" + okind + "'");

    cfg.noise_variance = j.value("noise_variance", cfg.noise_variance);
    const auto ro = j.value("readout", nlohmann::json::object());
    cfg.readout_type = ro.value("type", cfg.readout_type);
    cfg.ridge_degree = ro.value("degree", cfg.ridge_degree);
    cfg.ridge_lambda = ro.value("lambda", cfg.ridge_lambda);
    if (ro.contains("hidden")) cfg.mlp_hidden = ro["hidden"].get<std::vector<std::size_t>>();
    if (ro.contains("learning_rates"))
        cfg.train.learning_rates = ro["learning_rates"].get<std::vector<double>>();
    cfg.train.epochs_per_stage = ro.value("epochs_per_stage", cfg.train.epochs_per_stage);
    cfg.train.batch_size = ro.value("batch_size", cfg.train.batch_size);
    cfg.train.patience = ro.value("patience", cfg.train.patience);

    if (j.contains("mu_values")) cfg.mu_values = j["mu_values"].get<std::vector<double>>();
    if (cfg.kind == ExperimentKind::vdp_sweep && !res.contains("N")) cfg.N = 5;
    cfg.preset = j.value("preset", cfg.preset);
    cfg.out_dir = j.value("out_dir", std::string("out"));

    if (cfg.kind == ExperimentKind::forecast) {
        if (cfg.preset == "paper") {
            cfg.total_time = 11000.0;
            cfg.washout_time = 1000.0;
            cfg.mlp_hidden.assign(10, 20);
            cfg.train.epochs_per_stage = 7000;
            cfg.train.patience = 500;
            cfg.train.batch_size = 10000;
        } else if (!j.contains("total_time")) {
            cfg.total_time = 1100.0;
            cfg.washout_time = 100.0;
        }
        if (cfg.recipe == Recipe::uniform_normalized && !res.contains("recipe"))
            cfg.recipe = Recipe::haar_scaled;
        if (!res.contains("N")) cfg.N = 20;
    }
    cfg.validate();
    return cfg;
}

inline ReservoirSystem build_from_config(const ExperimentConfig& cfg) {
    switch (cfg.recipe) {
        case Recipe::uniform_normalized: return build_uniform(cfg.N, cfg.seed);
        case Recipe::haar_scaled: return build_haar(cfg.N, cfg.scale, cfg.seed);
        case Recipe::takens_shift: return build_takens((cfg.N - 1) / 2);
        case Recipe::custom: break;
    }
    throw ConfigError("build_from_config: custom reservoirs must be loaded, not built");
}

struct ExperimentResult {
    std::vector<std::filesystem::path> paths;
    std::map<std::string, double> metrics;
    std::vector<HypothesisReport> reports;
    bool passed = true;
    double wall_seconds = 0.0;
};

// ---------- pipelines ----------

namespace detail {

struct DrivenRun {
    std::vector<Vector> phase;       // post-washout phase points
    std::vector<Vector> states;      // post-washout reservoir states
    std::vector<double> all_inputs;  // full observation series
    std::size_t washout_len = 0;
};

inline DrivenRun integrate_and_drive(const ExperimentConfig& cfg, const ReservoirSystem& res,
                                     const std::vector<double>* override_inputs = nullptr) {
    const std::size_t n_steps = static_cast<std::size_t>(std::llround(cfg.total_time / cfg.system.h));
    const std::size_t washout_len =
        static_cast<std::size_t>(std::llround(cfg.washout_time / cfg.system.h));
    const auto pts = orbit(cfg.system, cfg.initial_condition, n_steps);
    std::vector<double> inputs;
    inputs.reserve(pts.size());
    for (const auto& p : pts) inputs.push_back(observe(cfg.observation, p));
    const std::vector<double>& z = override_inputs ? *override_inputs : inputs;

    const auto traj = drive(res, z, Vector(res.N, 0.0), washout_len, cfg.system.h);
    DrivenRun run;
    run.all_inputs = z;
    run.washout_len = washout_len;
    for (std::size_t t = washout_len; t < traj.states.size(); ++t) {
        run.phase.push_back(pts[t]);
        run.states.push_back(traj.states[t]);
    }
    return run;
}

inline void remove_outputs(const std::vector<std::filesystem::path>& paths) {
    for (const auto& p : paths) {
        std::error_code ec;
        std::filesystem::remove(p, ec);
    }
}

}  // namespace detail

// Attractor reconstruction: integrate, observe, drive, PCA-project, plot.
inline ExperimentResult run_reconstruct(const ExperimentConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    cfg.validate();
    std::filesystem::create_directories(cfg.out_dir);
    ExperimentResult result;
    try {
        const ReservoirSystem res = build_from_config(cfg);
        const auto run = detail::integrate_and_drive(cfg, res);
        const std::size_t k = std::min<std::size_t>(3, res.N);
        const auto pca = pca_project(run.states, k);

        double total_var = 0.0, top_var = 0.0;
        {
            const auto full = pca_project(run.states, res.N);
            for (double v : full.explained_variance) total_var += v;
        }
        for (double v : pca.explained_variance) top_var += v;
        result.metrics["pca_top" + std::to_string(k) + "_fraction"] =
            total_var > 0.0 ? top_var / total_var : 0.0;
        result.metrics["post_washout_samples"] = double(run.states.size());

        // CSVs
        std::vector<std::vector<double>> phase_rows, state_rows, proj_rows;
        for (std::size_t t = 0; t < run.phase.size(); ++t) {
            std::vector<double> pr{double(t) * cfg.system.h};
            pr.insert(pr.end(), run.phase[t].begin(), run.phase[t].end());
            phase_rows.push_back(pr);
            std::vector<double> sr{double(t) * cfg.system.h};
            sr.insert(sr.end(), run.states[t].begin(), run.states[t].end());
            state_rows.push_back(sr);
            std::vector<double> jr{double(t) * cfg.system.h};
            jr.insert(jr.end(), pca.projections[t].begin(), pca.projections[t].end());
            proj_rows.push_back(jr);
        }
        std::vector<std::string> ph{"t"};
        for (std::size_t i = 0; i < cfg.system.dim(); ++i) ph.push_back("x" + std::to_string(i + 1));
        std::vector<std::string> sh{"t"};
        for (std::size_t i = 0; i < res.N; ++i) sh.push_back("s" + std::to_string(i + 1));
        std::vector<std::string> jh{"t"};
        for (std::size_t i = 0; i < k; ++i) jh.push_back("pc" + std::to_string(i + 1));

        const auto phase_csv = cfg.out_dir / "phase.csv";
        const auto states_csv = cfg.out_dir / "states.csv";
        const auto proj_csv = cfg.out_dir / "projected.csv";
        write_csv(phase_csv, ph, phase_rows);
        write_csv(states_csv, sh, state_rows);
        write_csv(proj_csv, jh, proj_rows);
        result.paths = {phase_csv, states_csv, proj_csv};

        std::vector<std::array<double, 2>> orig2, proj2;
        for (const auto& p : run.phase) orig2.push_back({p[0], p.size() > 2 ? p[2] : p[1]});
        for (const auto& p : pca.projections) proj2.push_back({p[0], p.size() > 1 ? p[1] : 0.0});
        const auto orig_svg = cfg.out_dir / "attractor.svg";
        const auto proj_svg = cfg.out_dir / "projected.svg";
        write_svg_scatter(orig_svg, orig2, "original attractor (" + to_string(cfg.system.kind) + ")");
        write_svg_scatter(proj_svg, proj2, "reservoir states, top principal components");
        result.paths.push_back(orig_svg);
        result.paths.push_back(proj_svg);

        if (cfg.system.kind == SystemKind::lorenz) {
            const double ratio = two_means_separation(pca.projections);
            result.metrics["two_cluster_ratio"] = ratio;
            result.passed = result.passed && ratio > 2.0;
        }
        result.passed =
            result.passed && result.metrics["pca_top" + std::to_string(k) + "_fraction"] > 0.95;
    } catch (...) {
        detail::remove_outputs(result.paths);
        throw;
    }
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

// Van der Pol damping sweep, one reservoir seed shared across all mu.
inline ExperimentResult run_vdp_sweep(const ExperimentConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    std::filesystem::create_directories(cfg.out_dir);
    ExperimentResult result;
    try {
        ExperimentConfig base = cfg;
        base.N = cfg.N;
        const ReservoirSystem res = build_uniform(base.N, base.seed);

        std::vector<std::vector<double>> combined_rows;
        std::vector<std::array<double, 2>> overlay;
        std::vector<int> overlay_group;
        for (std::size_t mi = 0; mi < cfg.mu_values.size(); ++mi) {
            const double mu = cfg.mu_values[mi];
            ExperimentConfig sub = cfg;
            sub.system = DynamicalSystem::vanderpol(mu, cfg.system.h);
            sub.initial_condition = {-4.0, 5.0};
            sub.validate();
            const auto run = detail::integrate_and_drive(sub, res);
            const auto pca = pca_project(run.states, 2);

            const std::size_t tail = std::min<std::size_t>(1000, pca.projections.size());
            std::vector<Vector> loop(pca.projections.end() - long(tail), pca.projections.end());
            const double gap = max_angular_gap_deg(loop);
            result.metrics["closed_curve_gap_mu_" + format_double(mu)] = gap;
            if (mu > 0.0) result.passed = result.passed && gap < 30.0;

            for (std::size_t t = 0; t < pca.projections.size(); ++t) {
                combined_rows.push_back(
                    {mu, double(t) * cfg.system.h, pca.projections[t][0], pca.projections[t][1]});
                if (t + tail >= pca.projections.size()) {
                    overlay.push_back({pca.projections[t][0], pca.projections[t][1]});
                    overlay_group.push_back(int(mi));
                }
            }
        }
        const auto csv = cfg.out_dir / "vdp_sweep.csv";
        write_csv(csv, {"mu", "t", "pc1", "pc2"}, combined_rows);
        const auto svg = cfg.out_dir / "vdp_sweep.svg";
        write_svg_scatter(svg, overlay, "Van der Pol sweep, reservoir principal components",
                          &overlay_group);
        result.paths = {csv, svg};
    } catch (...) {
        detail::remove_outputs(result.paths);
        throw;
    }
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

// Lorenz filtering + one-step-ahead forecasting with noisy input.
inline ExperimentResult run_forecast(const ExperimentConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    std::filesystem::create_directories(cfg.out_dir);
    ExperimentResult result;
    try {
        const ReservoirSystem res = build_from_config(cfg);
        const std::size_t n_steps = static_cast<std::size_t>(std::llround(cfg.total_time / cfg.system.h));
        const std::size_t washout_len =
            static_cast<std::size_t>(std::llround(cfg.washout_time / cfg.system.h));
        const auto pts = orbit(cfg.system, cfg.initial_condition, n_steps);
        std::vector<double> clean;
        clean.reserve(pts.size());
        for (const auto& p : pts) clean.push_back(observe(cfg.observation, p));

        Rng noise_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
        const std::vector<double> noisy = add_noise(clean, cfg.noise_variance, noise_rng);
        const auto traj = drive(res, noisy, Vector(res.N, 0.0), washout_len, cfg.system.h);

        // samples: state at t predicts clean u_{t+1}
        std::vector<Vector> xs;
        std::vector<double> ys;
        std::vector<std::size_t> times;
        for (std::size_t t = washout_len; t + 1 < traj.states.size(); ++t) {
            xs.push_back(traj.states[t]);
            ys.push_back(clean[t + 1]);
            times.push_back(t);
        }
        const std::size_t n_train = xs.size() * 8 / 10;
        const std::vector<Vector> train_x(xs.begin(), xs.begin() + long(n_train));
        const std::vector<double> train_y(ys.begin(), ys.begin() + long(n_train));

        auto eval = [&](auto&& predict_fn) {
            double se = 0.0, mean = 0.0, var = 0.0;
            for (std::size_t i = n_train; i < xs.size(); ++i) mean += ys[i];
            mean /= double(xs.size() - n_train);
            for (std::size_t i = n_train; i < xs.size(); ++i) {
                const double e = predict_fn(i) - ys[i];
                se += e * e;
                var += (ys[i] - mean) * (ys[i] - mean);
            }
            const double mse = se / double(xs.size() - n_train);
            const double sd = std::sqrt(var / double(xs.size() - n_train));
            return std::pair<double, double>(mse, std::sqrt(mse) / sd);
        };

        std::function<double(const Vector&)> model_predict;
        if (cfg.readout_type == "mlp") {
            double ymin = *std::min_element(train_y.begin(), train_y.end());
            double ymax = *std::max_element(train_y.begin(), train_y.end());
            const double margin = 0.1 * (ymax - ymin);
            MlpModel arch = MlpModel::make(res.N, cfg.mlp_hidden, ymin - margin, ymax + margin);
            Rng train_rng(cfg.seed ^ 0xda3e39cb94b95bdbull);
            const auto fit = fit_mlp(train_x, train_y, arch, cfg.train, train_rng);
            result.metrics["mlp_val_mse"] = fit.best_val_mse;
            // training history export
            std::vector<std::vector<double>> hist;
            for (const auto& h : fit.history)
                hist.push_back({double(h.stage), double(h.epoch), h.train_mse, h.val_mse});
            const auto hist_csv = cfg.out_dir / "training_history.csv";
            write_csv(hist_csv, {"stage", "epoch", "train_mse", "val_mse"}, hist);
            result.paths.push_back(hist_csv);
            auto model = fit.model;
            model_predict = [model](const Vector& x) { return predict(model, x); };
        } else {
            // per-sample regularization keeps lambda meaningful as the Gram
            // matrix grows with the training-set size
            const auto fit = fit_ridge(train_x, train_y,
                                       FeatureMap::polynomial(res.N, cfg.ridge_degree),
                                       cfg.ridge_lambda * double(train_x.size()));
            result.metrics["ridge_train_mse"] = fit.train_mse;
            auto model = fit.model;
            model_predict = [model](const Vector& x) { return predict(model, x); };
        }

        const auto [mse, nrmse] = eval([&](std::size_t i) { return model_predict(xs[i]); });
        // persistence baseline: predict u_{t+1} by the noisy current input
        const auto [base_mse, base_nrmse] =
            eval([&](std::size_t i) { return noisy[times[i]]; });
        // identity filter baseline: noise floor of using the noisy value as-is
        const auto [ident_mse, ident_nrmse] =
            eval([&](std::size_t i) { return noisy[times[i] + 1]; });

        if (!std::isfinite(mse) || !std::isfinite(nrmse))
            throw std::runtime_error("run_forecast: non-finite metric");
        result.metrics["forecast_mse"] = mse;
        result.metrics["forecast_nrmse"] = nrmse;
        result.metrics["filter_mse"] = mse;
        result.metrics["persistence_nrmse"] = base_nrmse;
        result.metrics["persistence_mse"] = base_mse;
        result.metrics["identity_filter_mse"] = ident_mse;
        result.metrics["noise_floor"] = cfg.noise_variance;
        result.passed = nrmse < 0.05 && mse * 5.0 <= base_mse &&
                        (cfg.noise_variance == 0.0 || mse < cfg.noise_variance / 5.0);

        // outputs: prediction vs truth on the test segment
        std::vector<std::vector<double>> rows;
        std::vector<std::array<double, 2>> recon;
        for (std::size_t i = n_train; i < xs.size(); ++i) {
            const double pred = model_predict(xs[i]);
            const std::size_t t = times[i];
            rows.push_back({double(t) * cfg.system.h, ys[i], pred, noisy[t]});
            recon.push_back({pred, pts[t + 1][2]});
        }
        const auto pred_csv = cfg.out_dir / "forecast.csv";
        write_csv(pred_csv, {"t", "truth", "prediction", "noisy_input"}, rows);
        const auto overlay_svg = cfg.out_dir / "forecast_overlay.svg";
        {
            std::vector<std::array<double, 2>> pvst;
            for (const auto& r : rows) pvst.push_back({r[1], r[2]});
            write_svg_scatter(overlay_svg, pvst, "prediction vs truth (test segment)");
        }
        const auto recon_svg = cfg.out_dir / "reconstructed_attractor.svg";
        write_svg_scatter(recon_svg, recon, "reconstructed attractor (prediction, w)");
        result.paths.push_back(pred_csv);
        result.paths.push_back(overlay_svg);
        result.paths.push_back(recon_svg);
    } catch (...) {
        detail::remove_outputs(result.paths);
        throw;
    }
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

// Hypothesis checks on a given reservoir/system pair.
inline std::vector<HypothesisReport> run_diagnostics_suite(const ExperimentConfig& cfg,
                                                           const ReservoirSystem& res) {
    cfg.validate();
    std::vector<HypothesisReport> reports;
    reports.push_back(check_reachability(res));

    // ESP on the actual observation series
    const std::size_t n_steps = static_cast<std::size_t>(std::llround(cfg.total_time / cfg.system.h));
    const auto pts = orbit(cfg.system, cfg.initial_condition, n_steps);
    std::vector<double> inputs;
    double sup = 0.0;
    for (const auto& p : pts) {
        inputs.push_back(observe(cfg.observation, p));
        sup = std::max(sup, std::abs(inputs.back()));
    }
    Rng rng(cfg.seed ^ 0xa5a5a5a5a5a5a5a5ull);
    reports.push_back(check_esp(res, inputs, 4, rng));

    const std::size_t washout_len =
        static_cast<std::size_t>(std::llround(cfg.washout_time / cfg.system.h));
    std::vector<Vector> samples;
    const std::size_t avail = pts.size() - washout_len;
    const std::size_t want = std::min<std::size_t>(50, avail);
    for (std::size_t i = 0; i < want; ++i)
        samples.push_back(pts[washout_len + i * avail / want]);
    const std::size_t J = series_depth(res, sup);
    reports.push_back(check_immersion_rank(res, cfg.system, cfg.observation, samples, J));

    std::vector<Vector> inj_samples;
    const std::size_t want2 = std::min<std::size_t>(2000, avail);
    for (std::size_t i = 0; i < want2; ++i)
        inj_samples.push_back(pts[washout_len + i * avail / want2]);
    reports.push_back(check_injectivity(res, cfg.system, cfg.observation, inj_samples, J));

    if (res.N < 2 * cfg.system.dim() + 1)
        reports.back().details += "; warning: N < 2q+1 delay-map dimension";

    std::filesystem::create_directories(cfg.out_dir);
    nlohmann::json bundle = nlohmann::json::array();
    std::ofstream txt(cfg.out_dir / "diagnostics.txt", std::ios::trunc);
    for (const auto& r : reports) {
        bundle.push_back(r.to_json());
        txt << r.text_line() << "\n";
    }
    std::ofstream js(cfg.out_dir / "diagnostics.json", std::ios::trunc);
    js << bundle.dump(2) << "\n";
    return reports;
}

inline std::vector<HypothesisReport> run_diagnostics_suite(const ExperimentConfig& cfg) {
    return run_diagnostics_suite(cfg, build_from_config(cfg));
}

}  // namespace sr
