#include "swe/ldp.hpp"

#include "swe/fft.hpp"
#include "swe/kernel.hpp"
#include "swe/numerics.hpp"
#include "swe/parallel.hpp"
#include "swe/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace swe {

namespace {

constexpr double kZ95 = 1.959963984540054;  // two-sided 95% normal quantile

// Deterministic zero-noise path, materialized only at the levels the event
// tracker will look at.
std::vector<Field> reference_path(const SolverConfig& config, bool every_level) {
    SolverConfig cfg = config;
    cfg.epsilon = 0.0;
    WaveStepper eng(cfg);
    WaveStepper::State st = eng.initial_state();
    const bool linear = eng.forcing_is_linear();
    std::vector<Field> levels(config.steps + 1);
    Field state(config.grid);
    if (every_level || !linear) state = eng.materialize(st.pos);
    if (every_level) levels[0] = state;
    for (int j = 0; j < config.steps; ++j) {
        WaveStepper::StepInputs in;
        if (!linear) in.state_field = &state;
        eng.advance(st, j, in);
        if (every_level || !linear || j == config.steps - 1)
            state = eng.materialize(st.pos);
        if (every_level || j == config.steps - 1) levels[j + 1] = state;
    }
    return levels;
}

}  // namespace

WilsonInterval wilson_score(long long hits, int replicates) {
    double p = static_cast<double>(hits) / replicates;
    double z2 = kZ95 * kZ95;
    double denom = 1.0 + z2 / replicates;
    double center = p + z2 / (2.0 * replicates);
    double spread = kZ95 * std::sqrt(p * (1.0 - p) / replicates +
                                     z2 / (4.0 * replicates * replicates));
    WilsonInterval w{std::max(0.0, (center - spread) / denom),
                     std::min(1.0, (center + spread) / denom)};
    // sqrt roundoff can leave the degenerate endpoints an ulp off the exact
    // values; the -log transforms downstream need them exact.
    if (hits == 0) w.lo = 0.0;
    if (hits == replicates) w.hi = 1.0;
    return w;
}

ProbabilityEstimate estimate_probability(const EventSpec& event,
                                         const SolverConfig& config, double epsilon,
                                         int replicates, std::uint64_t seed,
                                         int workers) {
    event.validate(config.grid);
    if (replicates < 100)
        throw std::invalid_argument("estimate_probability: need at least 100 replicates");
    if (!(epsilon > 0.0) || epsilon > 1.0)
        throw std::invalid_argument("estimate_probability: epsilon must lie in (0, 1]");
    if (workers < 1) workers = 1;

    SolverConfig cfg = config;
    cfg.epsilon = epsilon;

    EventTracker probe(event, cfg.grid, cfg.steps);
    const bool every_level = probe.needs_every_step();
    const std::vector<Field> w = reference_path(cfg, every_level);

    // Chunked worker loop; each chunk owns a stepper and counts into its own
    // slot, so the total is independent of the worker count.
    const int chunks = std::min(workers, replicates);
    std::vector<long long> chunk_hits(chunks, 0);
    const double sqrt_dt = std::sqrt(cfg.dt());
    const double r = event.threshold;

    par::for_each_index(chunks, workers, [&](std::size_t c) {
        WaveStepper eng(cfg);
        const bool linear = eng.forcing_is_linear();
        const WaveStepper::State init = eng.initial_state();
        EventTracker tracker(event, cfg.grid, cfg.steps);
        Field state(cfg.grid), diff(cfg.grid);
        long long hits = 0;

        const long long lo = static_cast<long long>(c) * replicates / chunks;
        const long long hi = static_cast<long long>(c + 1) * replicates / chunks;
        for (long long rep = lo; rep < hi; ++rep) {
            const std::uint64_t key = rng::derive(seed, static_cast<std::uint64_t>(rep));
            WaveStepper::State st = init;
            tracker.reset();
            if (!linear) state = eng.materialize(st.pos);
            for (int j = 0; j < cfg.steps; ++j) {
                Spectrum noise = eng.sampler().draw_spectrum(
                    key, rng::LANE_NOISE, static_cast<std::uint32_t>(j), sqrt_dt);
                WaveStepper::StepInputs in;
                in.noise_hat = &noise;
                if (!linear) in.state_field = &state;
                eng.advance(st, j, in);
                const bool need_field =
                    every_level || !linear || j == cfg.steps - 1;
                if (need_field) state = eng.materialize(st.pos);
                if (every_level || j == cfg.steps - 1) {
                    for (std::size_t i = 0; i < diff.v.size(); ++i)
                        diff.v[i] = state.v[i] - w[j + 1].v[i];
                    tracker.offer(j + 1, diff);
                }
            }
            if (tracker.value() >= r) ++hits;
        }
        chunk_hits[c] = hits;
    });

    ProbabilityEstimate est;
    est.event = event;
    est.epsilon = epsilon;
    est.replicates = replicates;
    for (long long h : chunk_hits) est.hits += h;
    est.p_hat = static_cast<double>(est.hits) / replicates;
    WilsonInterval w95 = wilson_score(est.hits, replicates);
    est.wilson_lo = w95.lo;
    est.wilson_hi = w95.hi;
    est.seed = seed;
    est.unreliable = est.hits < 10;
    return est;
}

double gaussian_rate_oracle(const EventSpec& event, const SolverConfig& config,
                            int truncation) {
    event.validate(config.grid);
    if (!config.coeffs.sigma.is_constant() || !config.coeffs.drift.is_zero())
        throw std::invalid_argument(
            "gaussian_rate_oracle: needs constant sigma and zero drift");
    if (event.kind == EventSpec::Kind::SupExceed)
        throw std::invalid_argument(
            "gaussian_rate_oracle: running-sup events have no closed form");

    const Grid& g = config.grid;
    const double dt = config.dt();
    const double sigma = config.coeffs.sigma.c0;
    if (sigma == 0.0)
        throw std::invalid_argument("gaussian_rate_oracle: sigma must be nonzero");

    SpectralDensity dens(config.cov, g);

    // |g_hat|^2 per mode: unit for the point functional, transform of the
    // test field otherwise.
    std::vector<double> gsq(g.size(), 1.0);
    if (event.kind == EventSpec::Kind::LinearExceed) {
        SpectralTransform tr(g);
        Spectrum gh = tr.to_spectrum(event.test_field);
        for (std::size_t m = 0; m < g.size(); ++m) gsq[m] = std::norm(gh.c[m]);
    }

    int half = truncation > 0 ? std::min(truncation / 2, g.n / 2) : g.n / 2;
    auto in_cube = [&](int c) {
        int s = g.signed_mode(c);
        return truncation <= 0 || (s >= -half && s <= half);
    };

    double q = 0.0;
    const double inv_vol = 1.0 / (g.L * g.L * g.L);
    for (int iz = 0; iz < g.n; ++iz)
        for (int iy = 0; iy < g.n; ++iy)
            for (int ix = 0; ix < g.n; ++ix) {
                if (!(in_cube(ix) && in_cube(iy) && in_cube(iz))) continue;
                std::size_t m = g.index(ix, iy, iz);
                double fx = g.freq(ix), fy = g.freq(iy), fz = g.freq(iz);
                double wnorm = std::sqrt(fx * fx + fy * fy + fz * fz);
                double mode = 0.0;
                for (int j = 0; j < config.steps; ++j) {
                    double mj = kernel_multiplier(config.horizon - j * dt, wnorm);
                    mode += mj * mj;
                }
                q += dt * inv_vol * dens.at(m) * mode * gsq[m];
            }

    if (q <= 0.0)
        throw std::runtime_error("gaussian_rate_oracle: degenerate functional variance");
    double r = event.threshold;
    return r * r / (2.0 * sigma * sigma * q);
}

SlopeReport ldp_slope(const EventSpec& event, const SolverConfig& config,
                      const std::vector<double>& epsilons, int replicates,
                      std::uint64_t seed, const SlopeOptions& opts) {
    if (epsilons.empty())
        throw std::invalid_argument("ldp_slope: need at least one rung");
    for (std::size_t i = 0; i < epsilons.size(); ++i) {
        if (!(epsilons[i] > 0.0) || epsilons[i] > 1.0)
            throw std::invalid_argument("ldp_slope: every epsilon must lie in (0, 1]");
        if (i > 0 && !(epsilons[i] < epsilons[i - 1]))
            throw std::invalid_argument("ldp_slope: ladder must strictly decrease");
    }

    SlopeReport report;
    report.tolerance = opts.tolerance;
    const double inf = std::numeric_limits<double>::infinity();

    for (std::size_t i = 0; i < epsilons.size(); ++i) {
        SlopeRung rung;
        rung.estimate = estimate_probability(event, config, epsilons[i], replicates,
                                             rng::derive(seed, i), opts.workers);
        const ProbabilityEstimate& e = rung.estimate;
        double eps = e.epsilon;
        rung.neg_eps_log_p = e.p_hat > 0.0 ? -eps * std::log(e.p_hat) : inf;
        // The transform is decreasing, so the interval endpoints swap.
        rung.ci_lo = e.wilson_hi > 0.0 ? -eps * std::log(e.wilson_hi) : inf;
        rung.ci_hi = e.wilson_lo > 0.0 ? -eps * std::log(e.wilson_lo) : inf;
        rung.ci_lo = std::max(0.0, rung.ci_lo);  // p_hat near 1 can round past it
        rung.reliable = e.hits >= 10;
        report.rungs.push_back(std::move(rung));
    }

    std::vector<double> xs, ys, ws;
    for (const SlopeRung& rung : report.rungs) {
        if (!rung.reliable) continue;
        double width = rung.ci_hi - rung.ci_lo;
        xs.push_back(rung.estimate.epsilon);
        ys.push_back(rung.neg_eps_log_p);
        ws.push_back(1.0 / std::max(width, 1e-300));
    }
    report.insufficient = xs.size() < 3;

    report.reference = opts.reference;
    if (!report.reference && config.coeffs.sigma.is_constant() &&
        config.coeffs.drift.is_zero() && event.kind != EventSpec::Kind::SupExceed)
        report.reference = gaussian_rate_oracle(event, config);

    if (!report.insufficient) {
        num::LineFit fit = num::fit_line(xs, ys, ws);
        report.intercept = fit.intercept;
        report.slope = fit.slope;
        if (report.reference) {
            double ref = *report.reference;
            report.within_tolerance =
                std::abs(report.intercept - ref) <= opts.tolerance * std::max(ref, 1e-12);
        }
    }
    return report;
}

}  // namespace swe
