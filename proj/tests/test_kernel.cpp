#include <doctest.h>

#include "swe/kernel.hpp"
#include "swe/numerics.hpp"
#include "swe/rng.hpp"

#include <cmath>

using namespace swe;

TEST_SUITE("kernel") {

TEST_CASE("multiplier limits and bound") {
    CHECK(kernel_multiplier(0.7, 0.0) == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(kernel_multiplier(0.0, 3.0) == doctest::Approx(0.0));
    CHECK(kernel_multiplier(1.3, 2.0) ==
          doctest::Approx(std::sin(2.6) / 2.0).epsilon(1e-14));
    for (int i = 0; i < 200; ++i) {
        double t = 2.0 * rng::uniform(1, 0, rng::LANE_TEST, i);
        double xi = 40.0 * rng::uniform(2, 0, rng::LANE_TEST, i);
        CHECK(std::abs(kernel_multiplier(t, xi)) <= t * (1.0 + 1e-14));
    }
}

TEST_CASE("multiplier is smooth through tiny frequencies") {
    // Series m = t - t^3 xi^2/6 + t^5 xi^4/120 - ...; no catastrophic
    // cancellation allowed near the removable singularity.
    double t = 1.7;
    for (double xi : {1e-9, 1e-6, 1e-4, 1e-2}) {
        double series = t - t * t * t * xi * xi / 6.0 +
                        std::pow(t, 5) * std::pow(xi, 4) / 120.0;
        CHECK(kernel_multiplier(t, xi) ==
              doctest::Approx(series).epsilon(1e-12));
    }
}

TEST_CASE("propagator composes as a group and preserves the wronskian") {
    for (auto [t, s, w] : {std::array<double, 3>{0.3, 0.5, 2.0},
                           {0.1, 0.9, 0.0},
                           {0.25, 0.25, 17.5},
                           {1.0, 0.125, 0.7}}) {
        ModePropagator a = propagator(t, w), b = propagator(s, w);
        ModePropagator ab = propagator(t + s, w);
        CHECK(ab.pp == doctest::Approx(a.pp * b.pp + a.pv * b.vp).epsilon(1e-12));
        CHECK(ab.pv == doctest::Approx(a.pp * b.pv + a.pv * b.vv).epsilon(1e-12));
        CHECK(ab.vp == doctest::Approx(a.vp * b.pp + a.vv * b.vp).epsilon(1e-12));
        CHECK(ab.vv == doctest::Approx(a.vp * b.pv + a.vv * b.vv).epsilon(1e-12));
        CHECK(a.pp * a.vv - a.pv * a.vp == doctest::Approx(1.0).epsilon(1e-13));
    }
}

TEST_CASE("free evolution conserves spectral energy") {
    Grid g(8.0, 16);
    SpectralTransform tr(g);
    Field pos(g), vel(g);
    for (int iz = 0; iz < g.n; ++iz)
        for (int iy = 0; iy < g.n; ++iy)
            for (int ix = 0; ix < g.n; ++ix) {
                double x = ix * g.dx(), y = iy * g.dx();
                pos(ix, iy, iz) = std::cos(g.freq(1) * x) + 0.3 * std::cos(g.freq(2) * y);
                vel(ix, iy, iz) = 0.5 * std::sin(g.freq(1) * x);
            }
    InitialData init(pos, vel);

    auto energy = [&](const FieldPair& uv) {
        Field p = uv.position, v = uv.velocity;
        Spectrum ps = tr.to_spectrum(p), vs = tr.to_spectrum(v);
        double e = 0.0;
        for (int kz = 0; kz < g.n; ++kz)
            for (int ky = 0; ky < g.n; ++ky)
                for (int kx = 0; kx < g.n; ++kx) {
                    double fx = g.freq(kx), fy = g.freq(ky), fz = g.freq(kz);
                    double w2 = fx * fx + fy * fy + fz * fz;
                    std::size_t m = g.index(kx, ky, kz);
                    e += std::norm(vs.c[m]) + w2 * std::norm(ps.c[m]);
                }
        return e;
    };

    double e0 = energy(homogeneous_pair(init, g, 0.0));
    for (double t : {0.3, 0.9, 1.7}) {
        double et = energy(homogeneous_pair(init, g, t));
        CHECK(et == doctest::Approx(e0).epsilon(1e-10));
    }
}

TEST_CASE("single mode evolution matches the exact rotation") {
    Grid g(8.0, 16);
    double xi = g.freq(1);
    Field pos(g), vel(g);
    for (int iz = 0; iz < g.n; ++iz)
        for (int iy = 0; iy < g.n; ++iy)
            for (int ix = 0; ix < g.n; ++ix)
                pos(ix, iy, iz) = std::cos(xi * ix * g.dx());
    InitialData init(pos, vel);

    double t = 0.37;
    Field u = homogeneous_solution(init, g, t);
    for (int ix = 0; ix < g.n; ++ix)
        CHECK(u(ix, 3, 5) ==
              doctest::Approx(std::cos(t * xi) * std::cos(xi * ix * g.dx()))
                  .epsilon(1e-12));

    // Velocity data passes through the sine multiplier instead.
    InitialData vinit(vel, pos);
    Field uv = homogeneous_solution(vinit, g, t);
    for (int ix = 0; ix < g.n; ++ix)
        CHECK(uv(ix, 0, 0) ==
              doctest::Approx(kernel_multiplier(t, xi) * std::cos(xi * ix * g.dx()))
                  .epsilon(1e-12));
}

TEST_CASE("spectral energy integral anchor values") {
    // Independently derived: with flat unit modulation the integral is
    // c(beta)/(2 pi^2) * t^{2-beta} * int_0^inf u^{beta-3} sin^2 u du, which
    // evaluates to 1, 2, 2 sqrt2/3, sqrt2, sqrt2/2 at the probes below.
    CovarianceSpec b1(1.0, PhiSpec::constant(1.0));
    CovarianceSpec b05(0.5, PhiSpec::constant(1.0));
    CovarianceSpec b15(1.5, PhiSpec::constant(1.0));
    CHECK(dalang_integral(b1, 1.0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(dalang_integral(b1, 2.0) == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(dalang_integral(b05, 1.0) ==
          doctest::Approx(0.94280904158206337).epsilon(1e-10));
    CHECK(dalang_integral(b15, 1.0) ==
          doctest::Approx(1.4142135623730951).epsilon(1e-10));
    CHECK(dalang_integral(b15, 0.25) ==
          doctest::Approx(0.70710678118654752).epsilon(1e-10));
}

TEST_CASE("spectral energy integral scales exactly in time") {
    CovarianceSpec spec(0.7, PhiSpec::constant(1.3));
    double base = dalang_integral(spec, 1.0);
    for (double t : {0.2, 0.8, 3.7}) {
        CHECK(dalang_integral(spec, t) ==
              doctest::Approx(base * std::pow(t, 2.0 - 0.7)).epsilon(1e-10));
    }
}

TEST_CASE("mollifier transform anchors and bounds") {
    CHECK(mollifier_transform(0.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(mollifier_transform(0.5) ==
          doctest::Approx(0.98611378739538337).epsilon(1e-10));
    CHECK(mollifier_transform(1.0) ==
          doctest::Approx(0.94535329665256272).epsilon(1e-10));
    CHECK(mollifier_transform(2.5) ==
          doctest::Approx(0.69505253961414963).epsilon(1e-10));
    CHECK(mollifier_transform(5.0) ==
          doctest::Approx(0.17474351769829987).epsilon(1e-10));
    for (double u : {0.3, 1.7, 4.0, 9.0})
        CHECK(std::abs(mollifier_transform(u)) <= 1.0);
}

TEST_CASE("smoothed multiplier converges monotonically to the kernel") {
    double t = 1.0, xi = 2.5;  // t |xi| = 2.5, a genuinely oscillatory probe
    double exact = kernel_multiplier(t, xi);
    double prev = std::abs(mollified_multiplier(2, t, xi) - exact);
    for (int n : {4, 8, 16, 32, 64}) {
        double err = std::abs(mollified_multiplier(n, t, xi) - exact);
        CHECK(err < prev);
        prev = err;
    }
    CHECK(prev < 1e-3);
    // Unit mass at the origin is preserved by the smoothing.
    CHECK(mollified_multiplier(7, t, 0.0) == doctest::Approx(t).epsilon(1e-12));
}

}  // TEST_SUITE
