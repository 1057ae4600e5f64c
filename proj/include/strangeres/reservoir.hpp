#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "strangeres/dynsys.hpp"
#include "strangeres/errors.hpp"
#include "strangeres/linalg.hpp"
#include "strangeres/rng.hpp"

namespace sr {

enum class Recipe { uniform_normalized, haar_scaled, takens_shift, custom };

inline std::string to_string(Recipe r) {
    switch (r) {
        case Recipe::uniform_normalized: return "uniform_normalized";
        case Recipe::haar_scaled: return "haar_scaled";
        case Recipe::takens_shift: return "takens_shift";
        case Recipe::custom: return "custom";
    }
    return "?";
}

// The linear state map F(x, z) = A x + C z together with its provenance.
struct ReservoirSystem {
    std::size_t N = 0;
    Matrix A;
    Vector C;
    double rho_hat = 0.0;
    std::uint64_t seed = 0;
    Recipe recipe = Recipe::custom;
    double scale = 0.0;  // haar_scaled only
};

// A driven state sequence; the first washout_len states are transient.
struct StateTrajectory {
    std::vector<Vector> states;
    std::vector<double> inputs;
    std::size_t washout_len = 0;
    double dt = 0.01;
};

// N x N matrix with IID uniform entries, rescaled to unit spectral norm,
// plus a uniform input mask. Redraws if rho lands at the unit circle.
inline ReservoirSystem build_uniform(std::size_t N, std::uint64_t seed) {
    if (N < 1) throw DimensionError("build_uniform: N must be >= 1");
    Rng rng(seed);
    for (int attempt = 0; attempt < 100; ++attempt) {
        Matrix Ap(N, N);
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < N; ++j) Ap(i, j) = rng.uniform(-0.5, 0.5);
        Vector C(N);
        for (std::size_t i = 0; i < N; ++i) C[i] = rng.uniform(-0.5, 0.5);
        const double nrm = operator_norm(Ap);
        if (nrm == 0.0) continue;
        Ap.scale(1.0 / nrm);
        double rho;
        try {
            rho = spectral_radius(Ap, 1e-10);
        } catch (const NotConvergedError& e) {
            rho = e.last_estimate;
        }
        if (rho >= 1.0 - 1e-6) continue;
        ReservoirSystem res;
        res.N = N;
        res.A = std::move(Ap);
        res.C = std::move(C);
        res.rho_hat = rho;
        res.seed = seed;
        res.recipe = Recipe::uniform_normalized;
        return res;
    }
    throw ConstructionError("build_uniform: redraw cap reached without rho < 1");
}

// scale * Haar-orthogonal matrix; rho is the scale exactly. Input mask is
// uniform on [-1,1]^N, normalized to unit length.
inline ReservoirSystem build_haar(std::size_t N, double scale, std::uint64_t seed) {
    if (N < 1) throw DimensionError("build_haar: N must be >= 1");
    if (!(scale > 0.0 && scale < 1.0)) throw std::invalid_argument("build_haar: scale must be in (0,1)");
    Rng rng(seed);
    Matrix A = haar_orthogonal(N, rng);
    A.scale(scale);
    Vector C(N);
    double cn = 0.0;
    while (cn == 0.0) {
        for (std::size_t i = 0; i < N; ++i) C[i] = rng.uniform(-1.0, 1.0);
        cn = norm2(C);
    }
    for (double& c : C) c /= cn;
    ReservoirSystem res;
    res.N = N;
    res.A = std::move(A);
    res.C = std::move(C);
    res.rho_hat = scale;
    res.seed = seed;
    res.recipe = Recipe::haar_scaled;
    res.scale = scale;
    return res;
}

// Lower shift in dimension 2q+1 with input mask e1: the delay-map reservoir.
inline ReservoirSystem build_takens(std::size_t q) {
    if (q < 1) throw DimensionError("build_takens: q must be >= 1");
    const std::size_t N = 2 * q + 1;
    ReservoirSystem res;
    res.N = N;
    res.A = Matrix(N, N);
    for (std::size_t i = 1; i < N; ++i) res.A(i, i - 1) = 1.0;
    res.C = Vector(N, 0.0);
    res.C[0] = 1.0;
    res.rho_hat = 0.0;
    res.recipe = Recipe::takens_shift;
    return res;
}

// Iterates x_t = A x_{t-1} + C z_t over all inputs, starting from x0.
inline StateTrajectory drive(const ReservoirSystem& res, const std::vector<double>& inputs,
                             const Vector& x0, std::size_t washout_len, double dt = 0.01) {
    if (x0.size() != res.N) throw DimensionError("drive: x0 dimension mismatch");
    if (washout_len >= inputs.size()) throw std::invalid_argument("drive: washout must be < input length");
    StateTrajectory traj;
    traj.inputs = inputs;
    traj.washout_len = washout_len;
    traj.dt = dt;
    traj.states.reserve(inputs.size());
    Vector x = x0;
    for (std::size_t t = 0; t < inputs.size(); ++t) {
        Vector nx = mat_vec(res.A, x);
        for (std::size_t i = 0; i < res.N; ++i) {
            nx[i] += res.C[i] * inputs[t];
            if (!(std::abs(nx[i]) <= 1e12))
                throw DivergenceError(t, "drive: state overflow at step " + std::to_string(t));
        }
        traj.states.push_back(nx);
        x = std::move(nx);
    }
    return traj;
}

// Geometric tail bound for the truncated GS series at depth J.
inline double gs_tail_bound(const ReservoirSystem& res, double sup_omega, std::size_t J) {
    if (res.rho_hat < 1e-15) return 0.0;
    return std::pow(res.rho_hat, static_cast<double>(J)) * norm2(res.C) * sup_omega /
           (1.0 - res.rho_hat);
}

// Smallest J with rho^J ||C|| sup_omega / (1 - rho) < tol, capped at 10000.
// A nilpotent reservoir needs exactly N terms.
inline std::size_t effective_truncation(const ReservoirSystem& res, double sup_omega, double tol) {
    if (!(res.rho_hat < 1.0)) throw HypothesisViolatedError("effective_truncation: rho_hat must be < 1");
    if (res.rho_hat < 1e-15) return res.N;
    const double lead = norm2(res.C) * sup_omega / (1.0 - res.rho_hat);
    if (lead < tol) return 1;
    // closed form, then adjust for rounding
    double Jf = std::log(tol / lead) / std::log(res.rho_hat);
    std::size_t J = static_cast<std::size_t>(std::max(1.0, std::floor(Jf)));
    while (J <= 10000 && !(gs_tail_bound(res, sup_omega, J) < tol)) ++J;
    if (J > 10000) throw ConstructionError("effective_truncation: cap reached; use a smaller rho");
    return J;
}

// Truncated GS series  sum_{j=0}^{J-1} A^j C w(phi^{-j}(m)).
inline Vector gs_series(const ReservoirSystem& res, const DynamicalSystem& sys,
                        const ObservationFn& obs, const Vector& m, std::size_t J) {
    if (!(res.rho_hat < 1.0)) throw HypothesisViolatedError("gs_series: rho_hat must be < 1");
    if (J < 1) throw std::invalid_argument("gs_series: J must be >= 1");
    Vector sum(res.N, 0.0);
    Vector ajc = res.C;       // A^j C
    Vector p = m;             // phi^{-j}(m)
    for (std::size_t j = 0; j < J; ++j) {
        const double w = observe(obs, p);
        for (std::size_t i = 0; i < res.N; ++i) sum[i] += ajc[i] * w;
        if (j + 1 < J) {
            ajc = mat_vec(res.A, ajc);
            try {
                p = flow_step(sys, p, Direction::backward);
            } catch (const DivergenceError&) {
                const double bound = gs_tail_bound(res, std::abs(w) + 1.0, j + 1);
                throw SeriesTruncatedError(j + 1, bound,
                                           "gs_series: backward orbit diverged at depth " +
                                               std::to_string(j + 1));
            }
        }
    }
    return sum;
}

// Jacobian of the truncated GS w.r.t. phase coordinates, by central
// finite differences of gs_series. N x q.
inline Matrix gs_jacobian(const ReservoirSystem& res, const DynamicalSystem& sys,
                          const ObservationFn& obs, const Vector& m, std::size_t J,
                          double fd_eps = 1e-5) {
    if (!(fd_eps > 0.0)) throw std::invalid_argument("gs_jacobian: fd_eps must be > 0");
    const std::size_t q = m.size();
    Matrix Jac(res.N, q);
    for (std::size_t c = 0; c < q; ++c) {
        Vector mp = m, mm = m;
        mp[c] += fd_eps;
        mm[c] -= fd_eps;
        const Vector fp = gs_series(res, sys, obs, mp, J);
        const Vector fm = gs_series(res, sys, obs, mm, J);
        for (std::size_t i = 0; i < res.N; ++i) {
            const double d = (fp[i] - fm[i]) / (2.0 * fd_eps);
            if (!std::isfinite(d))
                throw std::runtime_error("gs_jacobian: non-finite difference; fd_eps too small");
            Jac(i, c) = d;
        }
    }
    return Jac;
}

}  // namespace sr
