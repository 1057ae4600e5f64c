#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "strangeres/dynsys.hpp"

using namespace sr;

TEST_CASE("vector fields at reference points") {
    const auto ros = DynamicalSystem::rossler();
    const Vector f0 = vector_field(ros, {0.0, 0.0, 0.0});
    CHECK(f0[0] == 0.0);
    CHECK(f0[1] == 0.0);
    CHECK(f0[2] == doctest::Approx(0.1));

    const auto vdp = DynamicalSystem::vanderpol(1.0);
    const Vector g0 = vector_field(vdp, {0.0, 0.0});
    CHECK(g0[0] == 0.0);
    CHECK(g0[1] == 0.0);

    // hand evaluation at (1,1,1)
    const auto lor = DynamicalSystem::lorenz();
    const Vector h0 = vector_field(lor, {1.0, 1.0, 1.0});
    CHECK(h0[0] == doctest::Approx(0.0));
    CHECK(h0[1] == doctest::Approx(26.0));
    CHECK(h0[2] == doctest::Approx(1.0 - 8.0 / 3.0));

    CHECK_THROWS_AS(vector_field(lor, Vector{1.0, 2.0}), DimensionError);
}

TEST_CASE("flow_step round trip") {
    // Rossler has moderate derivatives; the O(h^5) forward/backward mismatch
    // sits well below 1e-8 at h = 0.01
    const auto ros = DynamicalSystem::rossler();
    Vector p{2.0, 1.0, 5.0};
    for (int i = 0; i < 2000; ++i) p = flow_step(ros, p);
    const Vector q = flow_step(ros, p);
    const Vector back = flow_step(ros, q, Direction::backward);
    CHECK(norm_inf(back - p) < 1e-8);

    // Lorenz fifth derivatives reach ~1e6, so h^5 * |y^(5)|/120 ~ 1e-6;
    // measured max on-attractor mismatch is 9.2e-7
    const auto lor = DynamicalSystem::lorenz();
    Vector m{1.0, 2.0, 20.0};
    for (int i = 0; i < 2000; ++i) m = flow_step(lor, m);
    const Vector q2 = flow_step(lor, m);
    const Vector back2 = flow_step(lor, q2, Direction::backward);
    CHECK(norm_inf(back2 - m) < 2e-6);
}

TEST_CASE("flow_step fixes the Van der Pol origin") {
    const auto vdp = DynamicalSystem::vanderpol(1.0);
    const Vector q = flow_step(vdp, {0.0, 0.0});
    CHECK(q[0] == 0.0);
    CHECK(q[1] == 0.0);
}

TEST_CASE("flow_step against substepped integration") {
    DynamicalSystem coarse = DynamicalSystem::lorenz(0.01);
    DynamicalSystem fine = DynamicalSystem::lorenz(0.0005);
    const Vector p0{0.0, 1.0, 1.05};
    const Vector one = flow_step(coarse, p0);
    Vector sub = p0;
    for (int i = 0; i < 20; ++i) sub = flow_step(fine, sub);
    // single-step local error bound from the measured h^5 constant
    CHECK(norm_inf(one - sub) < 5e-6);

    // Rossler on-attractor is far tighter (the initial (2,1,5) point has a
    // stiff w-transient, so settle first)
    DynamicalSystem rc = DynamicalSystem::rossler(0.01);
    DynamicalSystem rf = DynamicalSystem::rossler(0.0005);
    Vector r0{2.0, 1.0, 5.0};
    for (int i = 0; i < 2000; ++i) r0 = flow_step(rc, r0);
    const Vector rone = flow_step(rc, r0);
    Vector rsub = r0;
    for (int i = 0; i < 20; ++i) rsub = flow_step(rf, rsub);
    CHECK(norm_inf(rone - rsub) < 1e-9);
}

TEST_CASE("RK4 order of convergence") {
    // error between h and h/2 over one time unit shrinks ~16x; a fine
    // reference keeps the ratio clean
    const Vector p0{2.0, 1.0, 5.0};
    auto integrate = [&](double h, int steps) {
        DynamicalSystem sys = DynamicalSystem::rossler(h);
        Vector p = p0;
        for (int i = 0; i < steps; ++i) p = flow_step(sys, p);
        return p;
    };
    const Vector a = integrate(0.01, 100);
    const Vector b = integrate(0.005, 200);
    const Vector ref = integrate(0.000625, 1600);
    const double e1 = norm_inf(a - ref);
    const double e2 = norm_inf(b - ref);
    const double factor = e1 / e2;
    CHECK(factor > 10.0);
    CHECK(factor < 24.0);
}

TEST_CASE("orbit lengths and boundedness") {
    const auto ros = DynamicalSystem::rossler();
    const auto short_orbit = orbit(ros, {2.0, 1.0, 5.0}, 1);
    CHECK(short_orbit.size() == 2);

    const auto traj = orbit(ros, {2.0, 1.0, 5.0}, 12000);
    CHECK(traj.size() == 12001);
    for (const auto& p : traj)
        for (double x : p) CHECK(std::abs(x) < 50.0);

    const auto lor = DynamicalSystem::lorenz();
    const auto ltraj = orbit(lor, {0.0, 1.0, 1.05}, 4000);
    const Vector& fin = ltraj.back();
    CHECK(fin[0] > -25.0);
    CHECK(fin[0] < 25.0);
    CHECK(fin[1] > -30.0);
    CHECK(fin[1] < 30.0);
    CHECK(fin[2] > 0.0);
    CHECK(fin[2] < 55.0);
}

TEST_CASE("orbit determinism") {
    const auto lor = DynamicalSystem::lorenz();
    const auto a = orbit(lor, {0.0, 1.0, 1.05}, 500);
    const auto b = orbit(lor, {0.0, 1.0, 1.05}, 500);
    for (std::size_t t = 0; t < a.size(); ++t)
        for (std::size_t i = 0; i < 3; ++i) CHECK(a[t][i] == b[t][i]);
}

TEST_CASE("round trip along the attractor") {
    const auto ros = DynamicalSystem::rossler();
    auto rtraj = orbit(ros, {2.0, 1.0, 5.0}, 3000);
    for (std::size_t t = 2000; t < 2020; ++t) {
        const Vector fwd = flow_step(ros, rtraj[t]);
        const Vector back = flow_step(ros, fwd, Direction::backward);
        CHECK(norm_inf(back - rtraj[t]) < 1e-8);
    }
    const auto lor = DynamicalSystem::lorenz();
    auto traj = orbit(lor, {0.0, 1.0, 1.05}, 3000);
    for (std::size_t t = 2000; t < 2020; ++t) {
        const Vector fwd = flow_step(lor, traj[t]);
        const Vector back = flow_step(lor, fwd, Direction::backward);
        CHECK(norm_inf(back - traj[t]) < 2e-6);
    }
}

TEST_CASE("divergence is reported with step index") {
    // backward Lorenz leaves the attractor and blows up
    const auto lor = DynamicalSystem::lorenz();
    try {
        orbit(lor, {0.0, 1.0, 1.05}, 100000, Direction::backward);
        FAIL("expected divergence");
    } catch (const DivergenceError& e) {
        CHECK(e.step_index > 0);
    }
}

TEST_CASE("Van der Pol enters a bounded annulus") {
    const auto vdp = DynamicalSystem::vanderpol(1.5);
    const auto traj = orbit(vdp, {-4.0, 5.0}, 4000);
    double max_r = 0.0;
    for (std::size_t t = traj.size() - 1000; t < traj.size(); ++t)
        max_r = std::max(max_r, norm2(traj[t]));
    CHECK(max_r < 10.0);
}

TEST_CASE("observe") {
    const Vector p{2.0, 1.0, 5.0};
    CHECK(observe(ObservationFn::coordinate(0), p) == 2.0);
    CHECK(observe(ObservationFn::linear({0.0, 1.0, 0.0}), p) == 1.0);
    CHECK_THROWS_AS(observe(ObservationFn::coordinate(3), p), DimensionError);

    // u-component over a Lorenz orbit stays in [-25, 25]
    const auto lor = DynamicalSystem::lorenz();
    const auto traj = orbit(lor, {0.0, 1.0, 1.05}, 4000);
    for (const auto& q : traj) {
        const double u = observe(ObservationFn::coordinate(0), q);
        CHECK(u > -25.0);
        CHECK(u < 25.0);
    }
}
