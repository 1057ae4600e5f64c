#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "strangeres/errors.hpp"
#include "strangeres/linalg.hpp"

namespace sr {

enum class SystemKind { rossler, vanderpol, lorenz };

inline std::string to_string(SystemKind k) {
    switch (k) {
        case SystemKind::rossler: return "rossler";
        case SystemKind::vanderpol: return "vanderpol";
        case SystemKind::lorenz: return "lorenz";
    }
    return "?";
}

// A named vector field plus the fixed-step RK4 map realizing the time-h flow.
struct DynamicalSystem {
    SystemKind kind;
    double mu = 1.0;   // Van der Pol damping; unused otherwise
    double h = 0.01;

    std::size_t dim() const { return kind == SystemKind::vanderpol ? 2u : 3u; }

    static DynamicalSystem rossler(double h = 0.01) { return {SystemKind::rossler, 0.0, h}; }
    static DynamicalSystem vanderpol(double mu, double h = 0.01) { return {SystemKind::vanderpol, mu, h}; }
    static DynamicalSystem lorenz(double h = 0.01) { return {SystemKind::lorenz, 0.0, h}; }
};

inline Vector vector_field(const DynamicalSystem& sys, const Vector& p) {
    if (p.size() != sys.dim()) throw DimensionError("vector_field: dimension mismatch");
    switch (sys.kind) {
        case SystemKind::rossler: {
            const double u = p[0], v = p[1], w = p[2];
            return {-v - w, u + v / 10.0, 1.0 / 10.0 + w * (u - 14.0)};
        }
        case SystemKind::vanderpol: {
            const double u = p[0], v = p[1];
            return {v, sys.mu * (1.0 - u * u) * v - u};
        }
        case SystemKind::lorenz: {
            // Standard Lorenz-63 signs.
            const double u = p[0], v = p[1], w = p[2];
            return {10.0 * (v - u), u * (28.0 - w) - v, u * v - 8.0 * w / 3.0};
        }
    }
    throw std::logic_error("vector_field: unknown system");
}

enum class Direction { forward, backward };

constexpr double kDivergenceCap = 1e6;

// One classical RK4 step of size +h / -h.
inline Vector flow_step(const DynamicalSystem& sys, const Vector& p, Direction dir = Direction::forward) {
    const double h = dir == Direction::forward ? sys.h : -sys.h;
    const std::size_t q = p.size();
    const Vector k1 = vector_field(sys, p);
    Vector tmp(q);
    for (std::size_t i = 0; i < q; ++i) tmp[i] = p[i] + 0.5 * h * k1[i];
    const Vector k2 = vector_field(sys, tmp);
    for (std::size_t i = 0; i < q; ++i) tmp[i] = p[i] + 0.5 * h * k2[i];
    const Vector k3 = vector_field(sys, tmp);
    for (std::size_t i = 0; i < q; ++i) tmp[i] = p[i] + h * k3[i];
    const Vector k4 = vector_field(sys, tmp);
    Vector out(q);
    for (std::size_t i = 0; i < q; ++i) {
        out[i] = p[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        if (!(std::abs(out[i]) <= kDivergenceCap))
            throw DivergenceError(0, "flow_step: state exceeded divergence cap");
    }
    return out;
}

// [p0, phi(p0), ..., phi^n(p0)]; length n_steps + 1.
inline std::vector<Vector> orbit(const DynamicalSystem& sys, const Vector& p0,
                                 std::size_t n_steps, Direction dir = Direction::forward) {
    if (n_steps < 1) throw std::invalid_argument("orbit: n_steps must be >= 1");
    std::vector<Vector> out;
    out.reserve(n_steps + 1);
    out.push_back(p0);
    for (std::size_t t = 0; t < n_steps; ++t) {
        try {
            out.push_back(flow_step(sys, out.back(), dir));
        } catch (const DivergenceError&) {
            throw DivergenceError(t + 1, "orbit: divergence at step " + std::to_string(t + 1));
        }
    }
    return out;
}

// Scalar observation of a phase point.
struct ObservationFn {
    enum class Kind { coordinate, linear, custom } kind = Kind::coordinate;
    std::size_t index = 0;
    Vector weights;
    std::function<double(const Vector&)> table;  // custom lookup

    static ObservationFn coordinate(std::size_t i) {
        ObservationFn o;
        o.kind = Kind::coordinate;
        o.index = i;
        return o;
    }
    static ObservationFn linear(Vector w) {
        ObservationFn o;
        o.kind = Kind::linear;
        o.weights = std::move(w);
        return o;
    }
    static ObservationFn custom(std::function<double(const Vector&)> fn) {
        ObservationFn o;
        o.kind = Kind::custom;
        o.table = std::move(fn);
        return o;
    }
};

inline double observe(const ObservationFn& obs, const Vector& p) {
    switch (obs.kind) {
        case ObservationFn::Kind::coordinate:
            if (obs.index >= p.size()) throw DimensionError("observe: coordinate index out of range");
            return p[obs.index];
        case ObservationFn::Kind::linear:
            return dot(obs.weights, p);
        case ObservationFn::Kind::custom:
            return obs.table(p);
    }
    throw std::logic_error("observe: unknown kind");
}

}  // namespace sr
