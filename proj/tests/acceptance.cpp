// Release acceptance battery: twelve end-to-end checks, one per guaranteed
// behavior of the library, each printed as a single pass/FAIL line carrying
// the numbers it was judged on. Run with no argument for the full battery or
// with a criterion number (1..12) to run one. The exit code is the number of
// failed criteria, so the binary slots directly into ctest.
//
// Every tolerance is pinned here, next to the check that uses it. Seeds are
// fixed so each criterion is bit-reproducible in isolation.

#include "swe/configfile.hpp"
#include "swe/covariance.hpp"
#include "swe/fft.hpp"
#include "swe/grid.hpp"
#include "swe/io.hpp"
#include "swe/kernel.hpp"
#include "swe/ldp.hpp"
#include "swe/numerics.hpp"
#include "swe/rate.hpp"
#include "swe/regularity.hpp"
#include "swe/rng.hpp"
#include "swe/runs.hpp"
#include "swe/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace swe;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

template <class... Args>
std::string fmt(const char* f, Args... args) {
    char buf[768];
    std::snprintf(buf, sizeof buf, f, args...);
    return std::string(buf);
}

Field zero_field(const Grid& g) {
    return Field(g);
}

InitialData zero_init(const Grid& g) {
    return InitialData(zero_field(g), zero_field(g));
}

// Displacement a*cos(2 pi x1 / L), the smoothest nonconstant initial state.
InitialData single_mode_init(const Grid& g, double amplitude) {
    Field pos(g);
    int n = g.n;
    for (int iz = 0; iz < n; ++iz)
        for (int iy = 0; iy < n; ++iy)
            for (int ix = 0; ix < n; ++ix)
                pos(ix, iy, iz) =
                    amplitude * std::cos(2.0 * M_PI * ix / n);
    return InitialData(std::move(pos), zero_field(g));
}

// C-infinity bump amplitude * exp(s - s / (1 - (rho/r0)^2)) supported in the
// ball of radius r0 around the box center, zero outside, value `amplitude`
// at the center.
Field center_bump(const Grid& g, double r0, double steepness, double amplitude) {
    Field f(g);
    int n = g.n;
    double c = g.L / 2.0;
    for (int iz = 0; iz < n; ++iz)
        for (int iy = 0; iy < n; ++iy)
            for (int ix = 0; ix < n; ++ix) {
                double dxc = ix * g.dx() - c;
                double dyc = iy * g.dx() - c;
                double dzc = iz * g.dx() - c;
                double rho2 = (dxc * dxc + dyc * dyc + dzc * dzc) / (r0 * r0);
                if (rho2 < 1.0)
                    f(ix, iy, iz) = amplitude *
                                    std::exp(steepness - steepness / (1.0 - rho2));
            }
    return f;
}

// Largest |field| over sites whose min-image distance to the box center
// exceeds `radius`.
double sup_outside_ball(const Field& f, double radius) {
    const Grid& g = f.grid;
    int n = g.n;
    double c = g.L / 2.0;
    double worst = 0.0;
    for (int iz = 0; iz < n; ++iz)
        for (int iy = 0; iy < n; ++iy)
            for (int ix = 0; ix < n; ++ix) {
                double dxc = g.min_image(ix * g.dx() - c);
                double dyc = g.min_image(iy * g.dx() - c);
                double dzc = g.min_image(iz * g.dx() - c);
                double d = std::sqrt(dxc * dxc + dyc * dyc + dzc * dzc);
                if (d > radius)
                    worst = std::max(worst, std::abs(f(ix, iy, iz)));
            }
    return worst;
}

std::map<std::string, std::string> dir_bytes(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        std::ifstream in(e.path(), std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        out[fs::relative(e.path(), dir).string()] = ss.str();
    }
    return out;
}

// ---------------------------------------------------------------------------
// 1. Wave kernel multiplier against the angular-average identity
//        sin(t r) / r = (t/2) int_{-1}^{1} cos(t r mu) dmu,
//    the quadrature form of pushing the spherical surface measure through the
//    Fourier transform. 100 random (t, |xi|) pairs over the range a 32-cell
//    box of side 8 actually exercises.
// ---------------------------------------------------------------------------

Outcome criterion_kernel_quadrature() {
    num::Quadrature gl = num::gauss_legendre(200);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        double t = 0.05 + 1.95 * rng::uniform(31, static_cast<rng::u32>(i), rng::LANE_TEST, 0);
        double r = 21.8 * rng::uniform(31, static_cast<rng::u32>(i), rng::LANE_TEST, 1);
        double quad = 0.0;
        for (std::size_t k = 0; k < gl.x.size(); ++k)
            quad += gl.w[k] * std::cos(t * r * gl.x[k]);
        quad *= 0.5 * t;
        worst = std::max(worst, std::abs(quad - kernel_multiplier(t, r)));
    }
    return {worst <= 1e-8,
            fmt("max |surface quadrature - multiplier| = %.3g over 100 samples, tol 1e-8",
                worst)};
}

// ---------------------------------------------------------------------------
// 2. Spectral energy integral: log-log slope in t equals 2 - beta to 1e-2
//    for beta in {0.5, 1, 1.5}, and the t = 1 value is strictly increasing
//    as beta approaches the integrability edge at 2.
// ---------------------------------------------------------------------------

Outcome criterion_energy_scaling() {
    const std::vector<double> ts = {0.25, 0.5, 1.0, 2.0};
    std::vector<double> lx, w(ts.size(), 1.0);
    for (double t : ts) lx.push_back(std::log(t));

    double worst = 0.0;
    for (double beta : {0.5, 1.0, 1.5}) {
        CovarianceSpec cov(beta, PhiSpec::constant(1.0));
        std::vector<double> ly;
        for (double t : ts) ly.push_back(std::log(dalang_integral(cov, t)));
        num::LineFit fit = num::fit_line(lx, ly, w);
        worst = std::max(worst, std::abs(fit.slope - (2.0 - beta)));
    }

    double prev = dalang_integral(CovarianceSpec(1.5, PhiSpec::constant(1.0)), 1.0);
    bool monotone = true;
    for (double beta : {1.9, 1.95, 1.99}) {
        double v = dalang_integral(CovarianceSpec(beta, PhiSpec::constant(1.0)), 1.0);
        monotone = monotone && v > prev;
        prev = v;
    }

    bool pass = worst <= 1e-2 && monotone;
    return {pass, fmt("max |slope - (2-beta)| = %.2e (tol 1e-2), edge growth %s",
                      worst, monotone ? "monotone" : "NOT monotone")};
}

// ---------------------------------------------------------------------------
// 3. Stationary field sampler: empirical x-lag covariance over 10^4 draws
//    matches the inverse-transform covariance table within 5% relative for
//    lag cells 2..8 (physical lags 2 dx .. L/4) on a 32-cell box.
// ---------------------------------------------------------------------------

Outcome criterion_noise_covariance() {
    Grid g(8.0, 32);
    const int n = 32, kLagLo = 2, kLagHi = 8, kDraws = 10000;
    CovarianceSpec cov(1.0, PhiSpec::constant(1.0));
    GaussianFieldSampler sampler(cov, g);
    SpectralTransform tr(g);
    Field ctab = covariance_table(sampler.density(), tr);

    std::vector<double> acc(kLagHi + 1, 0.0);
    const double inv_sites = 1.0 / static_cast<double>(g.size());
    for (int m = 0; m < kDraws; ++m) {
        Field u = sampler.draw(tr, 12345, rng::LANE_TEST, static_cast<rng::u32>(m));
        double sums[kLagHi + 1] = {0.0};
        for (int iz = 0; iz < n; ++iz)
            for (int iy = 0; iy < n; ++iy) {
                const double* row = u.v.data() + n * (iy + n * iz);
                for (int ix = 0; ix < n; ++ix) {
                    double a = row[ix];
                    for (int r = kLagLo; r <= kLagHi; ++r)
                        sums[r] += a * row[(ix + r) & (n - 1)];
                }
            }
        for (int r = kLagLo; r <= kLagHi; ++r) acc[r] += sums[r] * inv_sites;
    }

    double worst = 0.0;
    int worst_lag = kLagLo;
    for (int r = kLagLo; r <= kLagHi; ++r) {
        double emp = acc[r] / kDraws;
        double ref = ctab(r, 0, 0);
        double rel = std::abs(emp - ref) / std::abs(ref);
        if (rel > worst) {
            worst = rel;
            worst_lag = r;
        }
    }
    return {worst <= 0.05,
            fmt("max covariance rel err %.2f%% at lag %g (cells 2..8, 10^4 draws, tol 5%%)",
                100.0 * worst, worst_lag * g.dx())};
}

// ---------------------------------------------------------------------------
// 4. Finite propagation speed. (a) A compact bump evolved freely stays below
//    1e-10 outside the unit-speed cone grown by 2 dx at every time level.
//    (b) The same holds for noise forcing whose increments are band-limited
//    draws cut off by a compactly supported smooth mask.
//    Grid and bump parameters are chosen so the band-limitation tail of the
//    data sits well below the 1e-10 gate (checked by the leak figures the
//    line reports).
// ---------------------------------------------------------------------------

Outcome criterion_finite_speed() {
    const int kN = 128, kJ = 8, kBand = 8;
    const double kL = 8.0, kT = 0.5;
    const double kR0 = 2.0, kSteep = 16.0;   // free-evolution bump
    const double kRm = 1.5, kMaskSteep = 16.0;  // noise mask
    Grid g(kL, kN);
    double dxc = g.dx();
    CovarianceSpec cov(1.0, PhiSpec::constant(1.0));
    CoefficientSpec coeffs;  // sigma = 1, b = 0

    // (a) deterministic: bump displacement, zero velocity, no noise.
    SolverConfig det(g, kT, kJ, InitialData(center_bump(g, kR0, kSteep, 1.0), zero_field(g)),
                     cov, coeffs, 0.0);
    Trajectory free_run = solve(det, nullptr, 0);
    double worst_det = 0.0;
    for (int j = 0; j <= kJ; ++j) {
        double t = j * det.dt();
        worst_det = std::max(worst_det,
                             sup_outside_ball(free_run.position[j], kR0 + t + 2.0 * dxc));
    }

    // (b) masked noise: per-step increments are low-band draws multiplied by
    // a smooth mask of radius kRm, so every increment is exactly supported in
    // that ball and the solution cone grows from it.
    SolverConfig noi(g, kT, kJ, zero_init(g), cov, coeffs, 1.0);
    GaussianFieldSampler sampler(cov, g);
    SpectralTransform tr(g);
    Field mask = center_bump(g, kRm, kMaskSteep, 1.0);
    NoiseIncrements ni{g, kJ, noi.dt(), 0, {}};
    double sqrt_dt = std::sqrt(noi.dt());
    for (int j = 0; j < kJ; ++j) {
        Spectrum s = sampler.draw_spectrum(2026, rng::LANE_TEST, static_cast<rng::u32>(j));
        for (int iz = 0; iz < kN; ++iz)
            for (int iy = 0; iy < kN; ++iy)
                for (int ix = 0; ix < kN; ++ix)
                    if (std::abs(g.signed_mode(ix)) > kBand ||
                        std::abs(g.signed_mode(iy)) > kBand ||
                        std::abs(g.signed_mode(iz)) > kBand)
                        s.c[g.index(ix, iy, iz)] = 0.0;
        Field w = tr.to_field(s);
        double scale = sqrt_dt / std::max(w.sup_abs(), 1e-300);
        Field inc(g);
        for (std::size_t m = 0; m < inc.v.size(); ++m)
            inc.v[m] = mask.v[m] * w.v[m] * scale;
        ni.increments.push_back(std::move(inc));
    }
    Trajectory noise_run = solve(noi, nullptr, ni);
    double worst_noise = 0.0;
    for (int j = 0; j <= kJ; ++j) {
        double t = j * noi.dt();
        worst_noise = std::max(
            worst_noise, sup_outside_ball(noise_run.position[j], kRm + t + 2.0 * dxc));
    }

    bool pass = worst_det < 1e-10 && worst_noise < 1e-10;
    return {pass, fmt("anticone sup: free evolution %.2e, masked noise %.2e (tol 1e-10)",
                      worst_det, worst_noise)};
}

// ---------------------------------------------------------------------------
// 5. Zero-noise limit: with eps = 0 the seeded stochastic solver reproduces
//    the skeleton evolution bitwise, for 10 random controls and a nonlinear
//    coefficient pair, independent of the seed value.
// ---------------------------------------------------------------------------

Outcome criterion_skeleton_limit() {
    Grid g(8.0, 16);
    CovarianceSpec cov(1.0, PhiSpec::constant(1.0));
    CoefficientSpec coeffs;
    coeffs.sigma = CoefficientSpec::Fn::bounded_smooth(1.3);
    coeffs.drift = CoefficientSpec::Fn::affine(0.1, 0.2);
    SolverConfig cfg(g, 1.0, 16, zero_init(g), cov, coeffs, 0.0);
    SpectralDensity density(cov, g);
    GaussianFieldSampler sampler(cov, g);

    long long mismatched = 0;
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<Spectrum> slices;
        for (int j = 0; j < cfg.steps; ++j)
            slices.push_back(sampler.draw_spectrum(rng::derive(500, trial), rng::LANE_TEST,
                                                   static_cast<rng::u32>(j), 0.3));
        Control h(std::move(slices), cfg.dt(), density);

        Trajectory a = solve(cfg, &h, 777 + trial);
        Trajectory b = skeleton_solve(cfg, h);
        Trajectory c = solve(cfg, &h, 999'000'000 + trial);
        for (int j = 0; j <= cfg.steps; ++j) {
            if (std::memcmp(a.position[j].v.data(), b.position[j].v.data(),
                            a.position[j].v.size() * sizeof(double)) != 0)
                ++mismatched;
            if (std::memcmp(a.position[j].v.data(), c.position[j].v.data(),
                            a.position[j].v.size() * sizeof(double)) != 0)
                ++mismatched;
        }
    }
    return {mismatched == 0,
            fmt("%lld mismatched levels across 10 controls (bitwise, 2 seeds each)",
                mismatched)};
}

// ---------------------------------------------------------------------------
// 6. Covariance smoothing identities on a 16-cell box, flat and bump
//    modulation: the spectral inner product equals the double lattice sum
//    dx^6 sum_{x,y} g(x) C(x-y) h(y), and multiplying a spectrum by the
//    density is the lattice convolution with C. Both to 1e-10.
// ---------------------------------------------------------------------------

Outcome criterion_smoothing_identity() {
    Grid g(8.0, 16);
    const int n = 16;
    SpectralTransform tr(g);
    double worst_inner = 0.0, worst_conv = 0.0;

    int case_id = 0;
    for (const CovarianceSpec& cov :
         {CovarianceSpec(1.0, PhiSpec::constant(1.0)),
          CovarianceSpec(1.5, PhiSpec::gaussian_bump(1.0, 2.0))}) {
        SpectralDensity density(cov, g);
        GaussianFieldSampler sampler(density);
        Field ctab = covariance_table(density, tr);

        Spectrum gs = sampler.draw_spectrum(rng::derive(60, case_id), rng::LANE_TEST, 0, 0.2);
        Spectrum hs = sampler.draw_spectrum(rng::derive(60, case_id), rng::LANE_TEST, 1, 0.2);
        ++case_id;
        Field gf = tr.to_field(gs);
        Field hf = tr.to_field(hs);

        double dx3 = g.dx() * g.dx() * g.dx();
        double direct = 0.0;
        std::vector<double> conv(g.size(), 0.0);
        for (int xz = 0; xz < n; ++xz)
            for (int xy = 0; xy < n; ++xy)
                for (int xx = 0; xx < n; ++xx) {
                    std::size_t xi = g.index(xx, xy, xz);
                    double gx = gf.v[xi];
                    double acc = 0.0;
                    for (int yz = 0; yz < n; ++yz)
                        for (int yy = 0; yy < n; ++yy)
                            for (int yx = 0; yx < n; ++yx) {
                                double cv = ctab((xx - yx + n) & (n - 1),
                                                 (xy - yy + n) & (n - 1),
                                                 (xz - yz + n) & (n - 1));
                                acc += cv * hf.v[g.index(yx, yy, yz)];
                            }
                    conv[xi] = dx3 * acc;
                    direct += gx * acc;
                }
        direct *= dx3 * dx3;

        worst_inner = std::max(worst_inner,
                               std::abs(direct - rkhs_inner(density, gs, hs)));

        Spectrum prod(g);
        for (std::size_t m = 0; m < prod.c.size(); ++m)
            prod.c[m] = density.at(m) * hs.c[m];
        Field smoothed = tr.to_field(prod);
        for (std::size_t m = 0; m < conv.size(); ++m)
            worst_conv = std::max(worst_conv, std::abs(smoothed.v[m] - conv[m]));
    }

    bool pass = worst_inner <= 1e-10 && worst_conv <= 1e-10;
    return {pass, fmt("inner-product gap %.2e, convolution gap %.2e (tol 1e-10)",
                      worst_inner, worst_conv)};
}

// ---------------------------------------------------------------------------
// 7. Small-noise decay ladder for the additive point event whose exact decay
//    is Gaussian. Checks (i) the per-rung transformed estimate covers the
//    closed-form value within its propagated interval on at least 3 of 4
//    rungs, and (ii) the extrapolated rate lands within 10% of the
//    closed-form rate. The threshold is placed at 0.97 standard deviations
//    so every rung keeps a usable hit count at 10^4 replicates.
//
//    Clause (ii) is expected to FAIL, and the line below reports it
//    honestly. For a Gaussian tail, -eps*log p(eps) = rate
//    + eps*[log(c/sqrt(eps)) + log sqrt(2*pi)] + O(eps^2/c^2): the
//    correction is eps*log(1/eps)-sized, not linear, so a straight-line
//    extrapolation from reachable rungs (eps >= 0.125 here) keeps a bias
//    of about +0.13 absolute (+28% of the 0.4705 rate) no matter how many
//    replicates are thrown at it. Shrinking the bias under 10% needs rungs
//    near eps ~ 0.03, where the hit probability is ~1e-8 and a resolved
//    estimate would take ~1e10 replicates per rung; direct Monte Carlo
//    cannot buy that. Coverage clause (i) does pass: the per-rung
//    intervals are honest about the same finite-eps correction.
// ---------------------------------------------------------------------------

Outcome criterion_decay_ladder() {
    Grid g(8.0, 16);
    CovarianceSpec cov(1.0, PhiSpec::constant(1.0));
    SolverConfig cfg(g, 1.0, 64, zero_init(g), cov, CoefficientSpec{}, 1.0);
    std::array<int, 3> site{8, 8, 8};

    double unit_rate = gaussian_rate_oracle(EventSpec::point_exceed(site, 1.0), cfg);
    double q_var = 1.0 / (2.0 * unit_rate);  // variance of u(T, site) at eps = 1
    const double kSigmas = 0.97;
    double r = kSigmas * std::sqrt(q_var);
    EventSpec ev = EventSpec::point_exceed(site, r);

    const std::vector<double> ladder = {1.0, 0.5, 0.25, 0.125};
    SlopeReport rep = ldp_slope(ev, cfg, ladder, 10000, 424242);

    int covered = 0;
    std::ostringstream rungs;
    for (std::size_t i = 0; i < rep.rungs.size(); ++i) {
        double eps = ladder[i];
        double truth = -eps * std::log(num::normal_tail(kSigmas / std::sqrt(eps)));
        bool hit = rep.rungs[i].ci_lo <= truth && truth <= rep.rungs[i].ci_hi;
        covered += hit ? 1 : 0;
        rungs << fmt("%s%g:%lld hits", i ? ", " : "", eps, rep.rungs[i].estimate.hits);
    }
    double ref = rep.reference.value_or(0.0);
    double rel = ref > 0.0 ? std::abs(rep.intercept - ref) / ref : 1.0;
    bool pass = covered >= 3 && rep.within_tolerance && !rep.insufficient;
    return {pass,
            fmt("coverage %d/4 [%s]; intercept %.4f vs exact rate %.4f (%+.1f%%, tol 10%%)",
                covered, rungs.str().c_str(), rep.intercept, ref, 100.0 * rel)};
}

// ---------------------------------------------------------------------------
// 8. Rate minimizer against the closed-form additive rate restricted to the
//    same low-mode cube: within 1% for a point event and a linear event at
//    truncation 8, with all restarts agreeing to 1e-6 relative (the
//    practical convexity certificate).
// ---------------------------------------------------------------------------

Outcome criterion_rate_optimizer() {
    Grid g(8.0, 16);
    CovarianceSpec cov(1.0, PhiSpec::constant(1.0));
    SolverConfig cfg(g, 1.0, 64, zero_init(g), cov, CoefficientSpec{}, 1.0);

    Field weight(g);
    int n = g.n;
    for (int iz = 0; iz < n; ++iz)
        for (int iy = 0; iy < n; ++iy)
            for (int ix = 0; ix < n; ++ix)
                weight(ix, iy, iz) = std::cos(2.0 * M_PI * ix / n);

    RateOptions opts;  // truncation 8, 3 restarts
    double worst_rel = 0.0, worst_spread = 0.0;
    bool all_certified = true;
    for (const EventSpec& ev : {EventSpec::point_exceed({8, 8, 8}, 0.6),
                                EventSpec::linear_exceed(weight, 0.5)}) {
        RateReport rep = minimize_rate(ev, cfg, opts);
        double oracle = gaussian_rate_oracle(ev, cfg, opts.truncation);
        worst_rel = std::max(worst_rel, std::abs(rep.rate - oracle) / oracle);
        double lo = *std::min_element(rep.start_rates.begin(), rep.start_rates.end());
        double hi = *std::max_element(rep.start_rates.begin(), rep.start_rates.end());
        worst_spread = std::max(worst_spread, (hi - lo) / std::max(rep.rate, 1e-300));
        all_certified = all_certified && rep.status == RateReport::Status::Certified;
    }
    bool pass = worst_rel <= 0.01 && worst_spread <= 1e-6 && all_certified;
    return {pass,
            fmt("max |rate - oracle|/oracle = %.2e (tol 1e-2), restart spread %.1e (tol 1e-6)%s",
                worst_rel, worst_spread, all_certified ? "" : ", NOT certified")};
}

// ---------------------------------------------------------------------------
// 9. Space-time increment exponent of the driven field (additive forcing,
//    smooth single-mode start): fitted alpha within 0.1 of (2 - beta)/2 for
//    beta = 1 and beta = 1.5, from 200 trajectories at second moments.
// ---------------------------------------------------------------------------

Outcome criterion_path_exponents() {
    // Lag placement is a compromise between the two discretization artifacts:
    // below ~4 dx the band-limited field looks smooth (local slope rises
    // toward 1), above ~L/4 the periodic covariance saturates (slope sinks).
    // Gauges 0.25..2.5 on the N = 64 grid keep a full decade while holding
    // both fitted exponents inside the band.
    Grid g(8.0, 64);
    Region region(g, {0, 0, 0}, {63, 63, 63});
    std::vector<SpaceTimeLag> lags;
    for (int c : {2, 4, 8, 12, 20}) lags.push_back(SpaceTimeLag::space(c, 0, 0));

    std::ostringstream note;
    bool pass = true;
    int block = 0;
    for (double beta : {1.0, 1.5}) {
        CovarianceSpec cov(beta, PhiSpec::constant(1.0));
        SolverConfig cfg(g, 1.0, 64, single_mode_init(g, 0.05), cov, CoefficientSpec{}, 1.0);
        std::uint64_t base = rng::derive(9001, block++);
        auto make = [&](int i) {
            return solve(cfg, nullptr, rng::derive(base, i));
        };
        IncrementFit fit = increment_exponent(200, make, 2.0, lags, region);
        double target = (2.0 - beta) / 2.0;
        bool ok = std::abs(fit.alpha_hat - target) <= 0.1;
        pass = pass && ok;
        note << fmt("%sbeta %g: alpha %.3f (target %.2f +- 0.1, ci [%.3f, %.3f])",
                    block > 1 ? "; " : "", beta, fit.alpha_hat, target, fit.ci_lo,
                    fit.ci_hi);
    }
    return {pass, note.str()};
}

// ---------------------------------------------------------------------------
// 10. Picard construction: terminates within J + 1 iterations with gaps
//     non-increasing after the first contraction, over 20 seeded noise
//     paths mixing a nonlinear and an additive configuration, and lands on
//     the direct solver's trajectory.
// ---------------------------------------------------------------------------

Outcome criterion_picard_termination() {
    Grid g(8.0, 16);
    CovarianceSpec cov(1.0, PhiSpec::constant(1.0));
    CoefficientSpec smooth;
    smooth.sigma = CoefficientSpec::Fn::bounded_smooth(1.0);
    smooth.drift = CoefficientSpec::Fn::affine(0.1, 0.2);
    SolverConfig nonlinear(g, 1.0, 32, single_mode_init(g, 0.2), cov, smooth, 0.5);
    SolverConfig additive(g, 1.0, 32, zero_init(g), cov, CoefficientSpec{}, 1.0);

    int max_iter = 0;
    double worst_gap_rise = 0.0, worst_final = 0.0;
    for (int run = 0; run < 20; ++run) {
        const SolverConfig& cfg = run < 14 ? nonlinear : additive;
        NoiseIncrements ni =
            noise_increments(cov, g, cfg.steps, cfg.dt(), rng::derive(700, run));
        PicardResult pr = picard_solve(cfg, nullptr, ni, 1e-9);
        max_iter = std::max(max_iter, pr.iterations);
        for (std::size_t i = 2; i < pr.gaps.size(); ++i)
            worst_gap_rise = std::max(worst_gap_rise, pr.gaps[i] - pr.gaps[i - 1]);
        Trajectory direct = solve(cfg, nullptr, ni);
        for (int j = 0; j <= cfg.steps; ++j)
            for (std::size_t m = 0; m < direct.position[j].v.size(); ++m)
                worst_final = std::max(worst_final,
                                       std::abs(direct.position[j].v[m] -
                                                pr.trajectory.position[j].v[m]));
    }
    bool pass = max_iter <= 33 && worst_gap_rise <= 0.0 && worst_final <= 1e-8;
    return {pass,
            fmt("max iterations %d (cap 33), max gap rise %.1e, vs direct solve %.1e",
                max_iter, worst_gap_rise, worst_final)};
}

// ---------------------------------------------------------------------------
// 11. Averaging of oscillating controls: spectral controls modulated by
//     cos(2 pi n t) produce skeleton responses whose sup norm strictly
//     decreases along n = 4, 16, 64, reflecting the weak-* convergence of
//     the controls to zero.
// ---------------------------------------------------------------------------

Outcome criterion_oscillation_averaging() {
    Grid g(8.0, 16);
    const int kJ = 512;
    CovarianceSpec cov(1.0, PhiSpec::constant(1.0));
    SolverConfig cfg(g, 1.0, kJ, zero_init(g), cov, CoefficientSpec{}, 1.0);
    SpectralDensity density(cov, g);
    std::size_t lo = g.index(1, 0, 0);
    std::size_t hi = g.index(15, 0, 0);  // Hermitian partner of mode (1,0,0)
    const double amp = g.L * g.L * g.L / 2.0;

    std::vector<double> sups;
    for (int nosc : {4, 16, 64}) {
        std::vector<Spectrum> slices;
        for (int j = 0; j < kJ; ++j) {
            Spectrum s(g);
            double a = amp * std::cos(2.0 * M_PI * nosc * j * cfg.dt());
            s.c[lo] = a;
            s.c[hi] = a;
            slices.push_back(std::move(s));
        }
        Control h(std::move(slices), cfg.dt(), density);
        Trajectory traj = skeleton_solve(cfg, h);
        double sup = 0.0;
        for (const Field& f : traj.position) sup = std::max(sup, f.sup_abs());
        sups.push_back(sup);
    }
    bool pass = sups[0] > sups[1] && sups[1] > sups[2];
    return {pass, fmt("skeleton sup norms %.4f > %.4f > %.4f along n = 4, 16, 64%s",
                      sups[0], sups[1], sups[2], pass ? "" : " VIOLATED")};
}

// ---------------------------------------------------------------------------
// 12. Artifact determinism: every run directory's payload bytes are
//     identical across worker counts (noise check and decay-ladder runs)
//     and across repeated invocations (simulation run).
// ---------------------------------------------------------------------------

Outcome criterion_artifact_determinism() {
    fs::path base = fs::temp_directory_path() / "swe3_accept_artifacts";
    fs::remove_all(base);
    fs::create_directories(base);
    const std::string ts = "20260101T000000Z";
    int bad = 0;
    std::ostringstream note;

    auto compare = [&](const char* label, const std::string& sub,
                       cfg::ExperimentConfig c, int workers_b) {
        auto r1 = runs::run(sub, c, 1, ts);
        if (r1.exit_code != 0) {
            ++bad;
            note << label << " run failed: " << r1.message << "; ";
            return;
        }
        auto bytes1 = dir_bytes(r1.run_dir);
        auto r2 = runs::run(sub, c, workers_b, ts);
        bool same = r2.exit_code == 0 && r1.run_dir == r2.run_dir &&
                    dir_bytes(r2.run_dir) == bytes1;
        if (!same) {
            ++bad;
            note << label << " differs; ";
        } else {
            note << label << " " << bytes1.size() << " files identical; ";
        }
    };

    cfg::ExperimentConfig nc;
    nc.N = 16;
    nc.M = 200;
    nc.seed = 3;
    nc.out_dir = (base / "nc").string();
    compare("noise-check w1=w3", "noise-check", nc, 3);

    cfg::ExperimentConfig ls;
    ls.N = 8;
    ls.J = 8;
    ls.M = 300;
    ls.epsilons = {1.0, 0.5, 0.25};
    ls.event_kind = "point";
    ls.site = {0, 0, 0};
    ls.threshold = 0.2;
    ls.seed = 11;
    ls.out_dir = (base / "ls").string();
    compare("ldp-slope w1=w3", "ldp-slope", ls, 3);

    cfg::ExperimentConfig sim;
    sim.N = 8;
    sim.J = 4;
    sim.T = 0.5;
    sim.seed = 9;
    sim.out_dir = (base / "sim").string();
    compare("simulate rerun", "simulate", sim, 1);

    return {bad == 0, note.str()};
}

struct Criterion {
    const char* name;
    Outcome (*fn)();
};

const Criterion kCriteria[] = {
    {"kernel-quadrature", criterion_kernel_quadrature},
    {"energy-scaling", criterion_energy_scaling},
    {"noise-covariance", criterion_noise_covariance},
    {"finite-speed", criterion_finite_speed},
    {"skeleton-limit", criterion_skeleton_limit},
    {"smoothing-identity", criterion_smoothing_identity},
    {"decay-ladder", criterion_decay_ladder},
    {"rate-optimizer", criterion_rate_optimizer},
    {"path-exponents", criterion_path_exponents},
    {"picard-termination", criterion_picard_termination},
    {"oscillation-averaging", criterion_oscillation_averaging},
    {"artifact-determinism", criterion_artifact_determinism},
};

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    if (argc > 1) {
        only = std::atoi(argv[1]);
        if (only < 1 || only > 12) {
            std::fprintf(stderr, "usage: %s [criterion 1..12]\n", argv[0]);
            return 64;
        }
    }

    int failures = 0;
    for (int i = 0; i < 12; ++i) {
        if (only != 0 && only != i + 1) continue;
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = kCriteria[i].fn();
        } catch (const std::exception& e) {
            o = {false, fmt("threw: %s", e.what())};
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                          .count();
        std::printf("criterion %02d %-22s %s (%s) [%.1fs]\n", i + 1, kCriteria[i].name,
                    o.pass ? "pass" : "FAIL", o.detail.c_str(), secs);
        std::fflush(stdout);
        failures += o.pass ? 0 : 1;
    }
    return failures;
}
