// Microbenchmarks for the hot paths: the FFT bridge, one stationary field
// draw, one solver step (additive and nonlinear), and the radial energy
// integral. Sizes mirror the configurations the Monte Carlo drivers run at,
// so these numbers translate directly into replicate budgets.

#include "swe/covariance.hpp"
#include "swe/fft.hpp"
#include "swe/kernel.hpp"
#include "swe/rng.hpp"
#include "swe/solver.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace swe;

SolverConfig make_config(int n, CoefficientSpec coeffs) {
    Grid g(8.0, n);
    return SolverConfig(g, 1.0, 64, InitialData(Field(g), Field(g)),
                        CovarianceSpec(1.0, PhiSpec::constant(1.0)), coeffs, 1.0);
}

void bm_fft_roundtrip(benchmark::State& state) {
    Grid g(8.0, static_cast<int>(state.range(0)));
    SpectralTransform tr(g);
    CovarianceSpec cov(1.0, PhiSpec::constant(1.0));
    Field f = sample_field(cov, g, 7);
    for (auto _ : state) {
        Spectrum s = tr.to_spectrum(f);
        Field back = tr.to_field(s);
        benchmark::DoNotOptimize(back.v.data());
    }
}
BENCHMARK(bm_fft_roundtrip)->Arg(16)->Arg(32)->Arg(64);

void bm_field_draw(benchmark::State& state) {
    Grid g(8.0, static_cast<int>(state.range(0)));
    CovarianceSpec cov(1.0, PhiSpec::constant(1.0));
    GaussianFieldSampler sampler(cov, g);
    SpectralTransform tr(g);
    rng::u32 step = 0;
    for (auto _ : state) {
        Field f = sampler.draw(tr, 11, rng::LANE_TEST, step++);
        benchmark::DoNotOptimize(f.v.data());
    }
}
BENCHMARK(bm_field_draw)->Arg(16)->Arg(32);

void bm_solver_step_additive(benchmark::State& state) {
    SolverConfig cfg = make_config(static_cast<int>(state.range(0)), CoefficientSpec{});
    WaveStepper stepper(cfg);
    WaveStepper::State s = stepper.initial_state();
    rng::u32 j = 0;
    double sqrt_dt = std::sqrt(cfg.dt());
    for (auto _ : state) {
        Spectrum noise =
            stepper.sampler().draw_spectrum(3, rng::LANE_NOISE, j, sqrt_dt);
        WaveStepper::StepInputs in;
        in.noise_hat = &noise;
        stepper.advance(s, static_cast<int>(j % cfg.steps), in);
        ++j;
    }
}
BENCHMARK(bm_solver_step_additive)->Arg(16)->Arg(32);

void bm_solver_step_nonlinear(benchmark::State& state) {
    CoefficientSpec coeffs;
    coeffs.sigma = CoefficientSpec::Fn::bounded_smooth(1.0);
    coeffs.drift = CoefficientSpec::Fn::affine(0.1, 0.2);
    SolverConfig cfg = make_config(static_cast<int>(state.range(0)), coeffs);
    WaveStepper stepper(cfg);
    WaveStepper::State s = stepper.initial_state();
    rng::u32 j = 0;
    double sqrt_dt = std::sqrt(cfg.dt());
    for (auto _ : state) {
        Spectrum noise =
            stepper.sampler().draw_spectrum(3, rng::LANE_NOISE, j, sqrt_dt);
        Field u = stepper.materialize(s.pos);
        WaveStepper::StepInputs in;
        in.noise_hat = &noise;
        in.state_field = &u;
        stepper.advance(s, static_cast<int>(j % cfg.steps), in);
        ++j;
    }
}
BENCHMARK(bm_solver_step_nonlinear)->Arg(16)->Arg(32);

void bm_energy_integral(benchmark::State& state) {
    CovarianceSpec cov(1.0, PhiSpec::constant(1.0));
    double t = 0.5;
    for (auto _ : state) {
        benchmark::DoNotOptimize(dalang_integral(cov, t));
    }
}
BENCHMARK(bm_energy_integral);

}  // namespace

BENCHMARK_MAIN();
