// Integration acceptance suite: one line per criterion, overall exit code
// nonzero if any criterion fails. Criteria 8 and 10 are reported honestly;
// the measured geometry of this setup does not reach their thresholds (see
// README, "Known limits").
#include <chrono>
#include <cstdio>
#include <bit>
#include <complex>
#include <filesystem>
#include <vector>

#include "strangeres/diagnostics.hpp"
#include "strangeres/experiments.hpp"
#include "strangeres/persistence.hpp"

using namespace sr;
namespace fs = std::filesystem;

namespace {

struct Criterion {
    int id;
    bool passed;
    double seconds;
    std::string details;
};

std::vector<Criterion> g_results;

void record(int id, bool passed, double limit_s, std::chrono::steady_clock::time_point t0,
            const std::string& details) {
    const double s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool ok = passed && s < limit_s;
    g_results.push_back({id, ok, s, details});
    std::printf("%s  criterion %2d  (%.2fs, limit %.0fs)  %s\n", ok ? "PASS" : "FAIL", id, s,
                limit_s, details.c_str());
    std::fflush(stdout);
}

std::vector<Vector> lorenz_samples(std::size_t count, std::size_t stride) {
    const auto lor = DynamicalSystem::lorenz();
    Vector p{0.0, 1.0, 1.05};
    for (int i = 0; i < 2000; ++i) p = flow_step(lor, p);
    std::vector<Vector> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        out.push_back(p);
        for (std::size_t s = 0; s < stride; ++s) p = flow_step(lor, p);
    }
    return out;
}

fs::path scratch(const std::string& sub) {
    const fs::path dir = fs::temp_directory_path() / "strangeres_acceptance" / sub;
    fs::create_directories(dir);
    return dir;
}

bool same_bits(double a, double b) {
    return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

bool same_bits(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!same_bits(a[i], b[i])) return false;
    return true;
}

bool same_bits(const Matrix& a, const Matrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && same_bits(a.data(), b.data());
}

// 1. Krylov reachability Monte Carlo: 200 uniform draws at N=7, all full rank.
void criterion_1() {
    const auto t0 = std::chrono::steady_clock::now();
    std::size_t pass = 0;
    for (std::uint64_t seed = 1; seed <= 200; ++seed)
        if (check_reachability(build_uniform(7, seed)).passed) ++pass;
    record(1, pass == 200, 1.0, t0, "reachability full-rank " + std::to_string(pass) + "/200");
}

// 2. Condition (11) Monte Carlo: 200 uniform draws, lambda = {0.3, -0.2, 0.5}, n=2.
void criterion_2() {
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<std::complex<double>> lams{{0.3, 0.0}, {-0.2, 0.0}, {0.5, 0.0}};
    std::size_t pass = 0;
    for (std::uint64_t seed = 1; seed <= 200; ++seed)
        if (check_condition_11(build_uniform(7, seed), lams, 2).passed) ++pass;
    record(2, pass == 200, 2.0, t0, "condition-11 " + std::to_string(pass) + "/200");
}

// 3. Takens equivalence: shift-reservoir GS equals the backward 3-delay vector exactly.
void criterion_3() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto res = build_takens(1);
    const auto lor = DynamicalSystem::lorenz();
    const auto obs = ObservationFn::coordinate(0);
    const auto samples = lorenz_samples(100, 37);
    double max_diff = 0.0;
    for (const auto& m : samples) {
        const Vector f = gs_series(res, lor, obs, m, 3);
        Vector p = m;
        Vector delay(3);
        for (std::size_t j = 0; j < 3; ++j) {
            delay[j] = observe(obs, p);
            if (j + 1 < 3) p = flow_step(lor, p, Direction::backward);
        }
        for (std::size_t i = 0; i < 3; ++i)
            max_diff = std::max(max_diff, std::abs(f[i] - delay[i]));
    }
    record(3, max_diff == 0.0, 5.0, t0,
           "takens GS vs 3-delay max|diff| = " + format_double(max_diff));
}

// 4. GS fixed-point identity: residual below 10x the truncation tail bound.
void criterion_4() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto res = build_uniform(7, 1);
    const auto lor = DynamicalSystem::lorenz();
    const auto obs = ObservationFn::coordinate(0);
    const double sup = 20.0;
    const std::size_t J = series_depth(res, sup);
    const double tail = gs_tail_bound(res, sup, J);
    const auto samples = lorenz_samples(100, 37);
    double worst = 0.0;
    for (const auto& m : samples) {
        const Vector fm = gs_series(res, lor, obs, m, J);
        const Vector pm = flow_step(lor, m, Direction::backward);
        const Vector fpm = gs_series(res, lor, obs, pm, J);
        Vector resid = fm - mat_vec(res.A, fpm);
        const double w = observe(obs, m);
        for (std::size_t i = 0; i < res.N; ++i) resid[i] -= res.C[i] * w;
        worst = std::max(worst, norm2(resid));
    }
    record(4, worst < 10.0 * tail, 10.0, t0,
           "fixed-point residual " + format_double(worst) + " vs bound " +
               format_double(10.0 * tail) + " (J=" + std::to_string(J) + ")");
}

// 5. ESP contraction: zero-input gap after 1000 steps, plus a rho=0.999 control.
void criterion_5() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(17);
    auto run_gap = [&](const ReservoirSystem& res, std::size_t steps) {
        Vector a(res.N), b(res.N);
        for (auto& v : a) v = rng.gaussian();
        for (auto& v : b) v = rng.gaussian();
        const double initial = norm2(a - b);
        const std::vector<double> zeros(steps, 0.0);
        const auto ta = drive(res, zeros, a, 0);
        const auto tb = drive(res, zeros, b, 0);
        return std::pair<double, double>(norm2(ta.states.back() - tb.states.back()), initial);
    };
    const auto [gap, init] = run_gap(build_haar(20, 0.9, 17), 1000);
    const auto [ngap, ninit] = run_gap(build_haar(20, 0.999, 17), 100);
    record(5, gap < 1e-18 && ngap > 0.5 * ninit, 1.0, t0,
           "gap(rho=0.9,T=1000) = " + format_double(gap) + "; control gap/initial = " +
               format_double(ngap / ninit));
}

// 6. Jacobian consistency under step halving. The derivative series needs
// rho * Lip(backward flow step) < 1; the Lorenz backward step expands by
// ~e^0.146 per h=0.01, so rho=0.7 keeps the C1 condition comfortably met.
void criterion_6() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto res = build_haar(7, 0.7, 23);
    const auto lor = DynamicalSystem::lorenz();
    const auto obs = ObservationFn::coordinate(0);
    const std::size_t J = series_depth(res, 20.0);
    const auto samples = lorenz_samples(20, 53);
    double worst = 0.0;
    for (const auto& m : samples) {
        const Matrix Ja = gs_jacobian(res, lor, obs, m, J, 1e-5);
        const Matrix Jb = gs_jacobian(res, lor, obs, m, J, 5e-6);
        double dn = 0.0, nn = 0.0;
        for (std::size_t i = 0; i < Ja.data().size(); ++i) {
            dn += (Ja.data()[i] - Jb.data()[i]) * (Ja.data()[i] - Jb.data()[i]);
            nn += Jb.data()[i] * Jb.data()[i];
        }
        worst = std::max(worst, std::sqrt(dn / nn));
    }
    record(6, worst < 1e-4, 20.0, t0, "max relative step-halving error " + format_double(worst));
}

// 7. Immersion rank across 20 reservoir seeds.
void criterion_7() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto lor = DynamicalSystem::lorenz();
    const auto obs = ObservationFn::coordinate(0);
    const auto samples = lorenz_samples(50, 97);
    std::size_t pass = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed)
        if (check_immersion_rank(build_uniform(7, seed), lor, obs, samples, 100).passed) ++pass;
    record(7, pass >= 18, 60.0, t0, "immersion rank " + std::to_string(pass) + "/20 seeds");
}

// 8. Injectivity surrogate across 20 reservoir seeds. The check measures the
// inverse-Lipschitz conditioning of the embedding; for these reservoirs it
// sits around 2e2-6e3, far above the ~61 the near/far tolerances demand, so
// this criterion reports its honest failure rate.
void criterion_8() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto lor = DynamicalSystem::lorenz();
    const auto obs = ObservationFn::coordinate(0);
    const auto samples = lorenz_samples(2000, 13);
    std::size_t pass = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed)
        if (check_injectivity(build_uniform(7, seed), lor, obs, samples, 100).passed) ++pass;
    record(8, pass >= 18, 60.0, t0, "injectivity " + std::to_string(pass) + "/20 seeds");
}

// 9. Reconstruction pipelines across 20 seeds: Rossler variance capture and
// the Lorenz two-lobe surrogate.
void criterion_9() {
    const auto t0 = std::chrono::steady_clock::now();
    std::size_t ross = 0, lor = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        ExperimentConfig rc = parse_config({{"kind", "reconstruct"},
                                            {"system", {{"name", "rossler"}}},
                                            {"total_time", 120.0},
                                            {"washout_time", 60.0},
                                            {"reservoir", {{"N", 7}, {"seed", seed}}}});
        rc.out_dir = scratch("rossler_" + std::to_string(seed));
        const auto rr = run_reconstruct(rc);
        if (rr.metrics.at("pca_top3_fraction") > 0.95) ++ross;

        ExperimentConfig lc = parse_config({{"kind", "reconstruct"},
                                            {"total_time", 40.0},
                                            {"washout_time", 20.0},
                                            {"reservoir", {{"N", 7}, {"seed", seed}}}});
        lc.out_dir = scratch("lorenz_" + std::to_string(seed));
        const auto lr = run_reconstruct(lc);
        if (lr.metrics.at("pca_top3_fraction") > 0.95 &&
            lr.metrics.at("two_cluster_ratio") > 2.0)
            ++lor;
    }
    record(9, ross >= 18 && lor >= 18, 60.0, t0,
           "rossler " + std::to_string(ross) + "/20, lorenz " + std::to_string(lor) + "/20");
}

// 10. Forecast/filter desk run with the degree-2 ridge readout. The best
// causal readout on this noisy input plateaus near MSE 0.19 (the optimal
// linear filter on the same information), so the 0.05 thresholds report
// their honest miss here.
void criterion_10() {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentConfig cfg = parse_config({{"kind", "forecast"}, {"reservoir", {{"seed", 2}}}});
    cfg.out_dir = scratch("forecast");
    const auto r = run_forecast(cfg);
    const double nrmse = r.metrics.at("forecast_nrmse");
    const double mse = r.metrics.at("forecast_mse");
    const double pers = r.metrics.at("persistence_mse");
    const double filt = r.metrics.at("filter_mse");
    const bool ok = nrmse < 0.05 && mse * 5.0 <= pers && filt < 0.05;
    record(10, ok, 60.0, t0,
           "nrmse " + format_double(nrmse) + ", mse " + format_double(mse) + " vs persistence " +
               format_double(pers) + ", filter mse " + format_double(filt));
}

// 11. MLP gradient check on the desk-scale net.
void criterion_11() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(7);
    MlpModel net = MlpModel::make(20, {20, 20, 20}, -25.0, 25.0);
    net.randomize(rng);
    std::vector<Vector> xs;
    std::vector<double> ys;
    for (int k = 0; k < 10; ++k) {
        Vector x(20);
        for (auto& v : x) v = rng.uniform(-1.0, 1.0);
        xs.push_back(x);
        ys.push_back(rng.uniform(-20.0, 20.0));
    }
    // eps 1e-5 balances truncation against cancellation at this loss scale
    const double err = mlp_gradient_check(net, xs, ys, 1e-5);
    record(11, err < 1e-5, 5.0, t0, "max relative gradient error " + format_double(err));
}

// 12. Persistence round trips, 100 random artifacts of each kind, bitwise.
void criterion_12() {
    const auto t0 = std::chrono::steady_clock::now();
    const fs::path dir = scratch("persist");
    Rng rng(3);
    bool ok = true;
    for (std::uint64_t k = 1; k <= 100 && ok; ++k) {
        const auto res = k % 2 ? build_uniform(3 + k % 6, k) : build_haar(3 + k % 6, 0.9, k);
        save(res, dir / "r.srj");
        const auto back = load_reservoir(dir / "r.srj");
        ok = ok && same_bits(back.A, res.A) && same_bits(back.C, res.C) &&
             same_bits(back.rho_hat, res.rho_hat);
    }
    for (std::uint64_t k = 1; k <= 100 && ok; ++k) {
        RidgeModel m;
        m.fm = k % 2 ? FeatureMap::polynomial(2 + k % 4, 2) : FeatureMap::linear(2 + k % 4);
        m.weights.resize(m.fm.feature_dim());
        for (auto& w : m.weights) w = rng.gaussian();
        m.lambda = rng.uniform(0.0, 1.0);
        save(m, dir / "w.srj");
        const auto back = load_ridge(dir / "w.srj");
        ok = ok && same_bits(back.weights, m.weights) && same_bits(back.lambda, m.lambda);
    }
    for (std::uint64_t k = 1; k <= 100 && ok; ++k) {
        MlpModel m = MlpModel::make(2 + k % 4, {4, 3}, -1.0, 1.0);
        m.randomize(rng);
        save(m, dir / "m.srj");
        const auto back = load_mlp(dir / "m.srj");
        for (std::size_t l = 0; l < m.W.size(); ++l)
            ok = ok && same_bits(back.W[l], m.W[l]) && same_bits(back.b[l], m.b[l]);
    }
    const auto res = build_haar(4, 0.8, 5);
    for (std::uint64_t k = 1; k <= 100 && ok; ++k) {
        std::vector<double> inputs(20);
        for (auto& z : inputs) z = rng.uniform(-2.0, 2.0);
        const auto traj = drive(res, inputs, Vector(4, 0.0), 3);
        save(traj, dir / "t.srj");
        const auto back = load_trajectory(dir / "t.srj");
        ok = ok && same_bits(back.inputs, traj.inputs);
        for (std::size_t t = 0; t < traj.states.size() && ok; ++t)
            ok = ok && same_bits(back.states[t], traj.states[t]);
    }
    record(12, ok, 5.0, t0, std::string("bitwise round trips ") + (ok ? "exact" : "broken"));
}

}  // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    criterion_11();
    criterion_12();
    std::size_t failed = 0;
    for (const auto& c : g_results)
        if (!c.passed) ++failed;
    std::printf("%zu/12 criteria passed\n", g_results.size() - failed);
    return failed == 0 ? 0 : 1;
}
