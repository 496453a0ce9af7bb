#include "swe/covariance.hpp"

#include "swe/numerics.hpp"
#include "swe/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace swe {

PhiSpec PhiSpec::constant(double value, double delta) {
    PhiSpec p;
    p.family = Family::Constant;
    p.value = value;
    p.delta = delta;
    return p;
}

PhiSpec PhiSpec::gaussian_bump(double amplitude, double width, double delta) {
    PhiSpec p;
    p.family = Family::GaussianBump;
    p.amplitude = amplitude;
    p.width = width;
    p.delta = delta;
    return p;
}

double PhiSpec::at_radius(double r) const {
    switch (family) {
        case Family::Constant:
            return value;
        case Family::GaussianBump:
            return amplitude * std::exp(-r * r / (2.0 * width * width));
    }
    return 0.0;  // unreachable
}

CovarianceSpec::CovarianceSpec(double beta_, PhiSpec phi_) : beta(beta_), phi(phi_) {
    if (!(beta > 0.0 && beta < 2.0))
        throw std::invalid_argument(
            "CovarianceSpec: beta must lie in (0, 2); outside, the kernel's "
            "spectral integral against the wave multiplier diverges");
    if (!(phi.delta > 0.0 && phi.delta <= 1.0))
        throw std::invalid_argument("CovarianceSpec: delta must lie in (0, 1]");
    if (phi.is_constant()) {
        if (!(phi.value > 0.0))
            throw std::invalid_argument("CovarianceSpec: constant phi needs value > 0");
    } else {
        if (!(phi.amplitude > 0.0 && phi.width > 0.0))
            throw std::invalid_argument(
                "CovarianceSpec: gaussian_bump phi needs amplitude > 0, width > 0");
    }
    normalization = num::riesz_constant(beta) * (phi.is_constant() ? phi.value : 1.0);
    if (!(normalization > 0.0))
        throw std::invalid_argument("CovarianceSpec: normalization must be positive");
}

namespace {

// Average of |xi|^{beta-3} over the cube [-a, a]^3, via the scale-invariant
// cube integral of |u|^{beta-3}.
double cell_average_power(double exponent_plus_3, double a) {
    // exponent_plus_3 = p with integrand |u|^{p-3}; average over [-a,a]^3 of
    // |x|^{p-3} = a^{p-3} * cube_integral(p) / 8.
    return std::pow(a, exponent_plus_3 - 3.0) * num::cube_integral(exponent_plus_3) / 8.0;
}

Field flat_density(const CovarianceSpec& spec, const Grid& g) {
    Field s(g);
    const double expo = spec.beta - 3.0;
    for (int iz = 0; iz < g.n; ++iz)
        for (int iy = 0; iy < g.n; ++iy)
            for (int ix = 0; ix < g.n; ++ix) {
                double fx = g.freq(ix), fy = g.freq(iy), fz = g.freq(iz);
                double r2 = fx * fx + fy * fy + fz * fz;
                s(ix, iy, iz) = spec.normalization * std::pow(r2, 0.5 * expo);
            }
    // Zero mode: average over the origin's frequency cell, side 2*pi/L.
    const double pi = 3.14159265358979323846;
    s.v[0] = spec.normalization * cell_average_power(spec.beta, pi / g.L);
    return s;
}

Field modulated_density(const CovarianceSpec& spec, const Grid& g) {
    // Sample the covariance phi(|x|)|x|^-beta at minimal-image radii, with the
    // origin cell averaged (phi is smooth there, the singular factor is not).
    Field cov(g);
    for (int iz = 0; iz < g.n; ++iz)
        for (int iy = 0; iy < g.n; ++iy)
            for (int ix = 0; ix < g.n; ++ix) {
                double rx = g.min_image(ix * g.dx());
                double ry = g.min_image(iy * g.dx());
                double rz = g.min_image(iz * g.dx());
                double r = std::sqrt(rx * rx + ry * ry + rz * rz);
                cov(ix, iy, iz) = r == 0.0 ? spec.phi.at_radius(0.0) *
                                                 cell_average_power(3.0 - spec.beta,
                                                                    0.5 * g.dx())
                                           : spec.phi.at_radius(r) * std::pow(r, -spec.beta);
            }
    SpectralTransform tr(g);
    Spectrum sp = tr.to_spectrum(cov);
    Field s(g);
    double max_val = 0.0;
    for (std::size_t m = 0; m < sp.c.size(); ++m) {
        s.v[m] = sp.c[m].real();  // imaginary part is roundoff: cov is even
        if (s.v[m] > max_val) max_val = s.v[m];
    }
    const double floor = -1e-10 * max_val;
    for (double& v : s.v) {
        if (v < floor)
            throw std::runtime_error(
                "spectral density went negative beyond roundoff; the sampled "
                "modulation is not positive definite on this grid");
        if (v < 0.0) v = 0.0;
    }
    return s;
}

}  // namespace

SpectralDensity::SpectralDensity(const CovarianceSpec& spec, const Grid& grid)
    : spec_(spec),
      table_(spec.phi.is_constant() ? flat_density(spec, grid)
                                    : modulated_density(spec, grid)) {}

GaussianFieldSampler::GaussianFieldSampler(const CovarianceSpec& spec, const Grid& grid)
    : GaussianFieldSampler(SpectralDensity(spec, grid)) {}

GaussianFieldSampler::GaussianFieldSampler(SpectralDensity density)
    : density_(std::move(density)) {
    const Grid& g = density_.grid();
    const double vol = g.L * g.L * g.L;
    amp_.resize(g.size());
    for (std::size_t m = 0; m < amp_.size(); ++m)
        amp_[m] = std::sqrt(density_.at(m) * vol);
}

Spectrum GaussianFieldSampler::draw_spectrum(std::uint64_t seed, std::uint32_t lane,
                                             std::uint32_t step, double scale) const {
    const Grid& g = density_.grid();
    Spectrum sp(g);
    const double inv_sqrt2 = 0.7071067811865476;
    for (std::size_t m = 0; m < sp.c.size(); ++m) {
        std::size_t mc = SpectralTransform::conjugate_index(g, m);
        if (m == mc) {
            // Self-paired mode: coefficient must be real.
            rng::NormalPair zp = rng::normal_pair(seed, step, lane, m);
            sp.c[m] = scale * amp_[m] * zp.z0;
        } else {
            // Both partners draw at the lower index, so either can be
            // generated first (or alone) with the same result.
            std::size_t lo = m < mc ? m : mc;
            rng::NormalPair zp = rng::normal_pair(seed, step, lane, lo);
            std::complex<double> z(zp.z0 * inv_sqrt2, zp.z1 * inv_sqrt2);
            if (m != lo) z = std::conj(z);
            sp.c[m] = scale * amp_[m] * z;
        }
    }
    return sp;
}

Field GaussianFieldSampler::draw(SpectralTransform& transform, std::uint64_t seed,
                                 std::uint32_t lane, std::uint32_t step,
                                 double scale) const {
    return transform.to_field(draw_spectrum(seed, lane, step, scale));
}

Field sample_field(const CovarianceSpec& spec, const Grid& grid, std::uint64_t seed) {
    GaussianFieldSampler sampler(spec, grid);
    SpectralTransform tr(grid);
    return sampler.draw(tr, seed, rng::LANE_FIELD, 0);
}

NoiseIncrements noise_increments(const CovarianceSpec& spec, const Grid& grid, int steps,
                                 double dt, std::uint64_t seed) {
    if (steps < 1) throw std::invalid_argument("noise_increments: need steps >= 1");
    if (!(dt > 0.0)) throw std::invalid_argument("noise_increments: need dt > 0");
    NoiseIncrements out;
    out.grid = grid;
    out.steps = steps;
    out.dt = dt;
    out.seed = seed;
    out.increments.reserve(steps);
    GaussianFieldSampler sampler(spec, grid);
    SpectralTransform tr(grid);
    const double scale = std::sqrt(dt);
    for (int j = 0; j < steps; ++j)
        out.increments.push_back(
            sampler.draw(tr, seed, rng::LANE_NOISE, static_cast<std::uint32_t>(j), scale));
    return out;
}

Field covariance_table(const SpectralDensity& density, SpectralTransform& transform) {
    Spectrum sp(density.grid());
    for (std::size_t m = 0; m < sp.c.size(); ++m) sp.c[m] = density.at(m);
    return transform.to_field(sp);
}

double rkhs_inner(const SpectralDensity& density, const Spectrum& g, const Spectrum& h) {
    if (!(g.grid == density.grid()) || !(h.grid == density.grid()))
        throw std::invalid_argument("rkhs_inner: grid mismatch");
    const Grid& gr = density.grid();
    double acc = 0.0;
    for (std::size_t m = 0; m < g.c.size(); ++m) {
        acc += density.at(m) * (g.c[m].real() * h.c[m].real() +
                                g.c[m].imag() * h.c[m].imag());
    }
    return acc / (gr.L * gr.L * gr.L);
}

double rkhs_norm_sq(const SpectralDensity& density, const Spectrum& g) {
    return rkhs_inner(density, g, g);
}

}  // namespace swe
