// Spatial covariance structure of the driving noise: a Riesz kernel |x|^-beta
// modulated by a bounded positive profile phi, its discrete spectral density
// on the torus, and counter-addressed Gaussian sampling of fields and
// white-in-time increments with that covariance.
#pragma once

#include "swe/fft.hpp"
#include "swe/grid.hpp"

#include <cstdint>
#include <vector>

namespace swe {

struct PhiSpec {
    enum class Family { Constant, GaussianBump };

    Family family = Family::Constant;
    double value = 1.0;      // Constant: level c > 0
    double amplitude = 1.0;  // GaussianBump: peak height
    double width = 1.0;      // GaussianBump: Gaussian std dev
    double delta = 1.0;      // Holder exponent of grad phi, in ]0,1]

    static PhiSpec constant(double value, double delta = 1.0);
    static PhiSpec gaussian_bump(double amplitude, double width, double delta = 1.0);

    bool is_constant() const { return family == Family::Constant; }
    double at_radius(double r) const;
};

struct CovarianceSpec {
    double beta = 1.0;  // singularity exponent, open interval (0, 2)
    PhiSpec phi;
    // Fourier-pair constant of |x|^-beta (times the constant level when phi
    // is flat): the coefficient of |xi|^{beta-3} in the spectral density.
    double normalization = 0.0;

    CovarianceSpec(double beta, PhiSpec phi);
};

// Nonnegative density S_k on the grid's frequency lattice, normalized so that
// the real-space covariance is  C(r) = (1/L^3) sum_k S_k e^{i xi_k . r}.
//
// Flat phi uses the closed form normalization * |xi|^{beta-3}, with the zero
// mode replaced by the density's average over the origin's frequency cell
// [-pi/L, pi/L]^3 (the pointwise value diverges but is locally integrable).
// Non-flat phi transforms the sampled covariance phi(|x|) |x|^-beta, with the
// origin cell of the box replaced by the cell average of the singular factor;
// roundoff-level negative density values (within 1e-10 of the maximum) are
// clamped to zero, anything more negative is a positive-definiteness failure
// and throws.
class SpectralDensity {
public:
    SpectralDensity(const CovarianceSpec& spec, const Grid& grid);

    const Grid& grid() const { return table_.grid; }
    const CovarianceSpec& spec() const { return spec_; }
    const Field& table() const { return table_; }

    double at(std::size_t mode) const { return table_.v[mode]; }
    double at(int kx, int ky, int kz) const { return table_(kx, ky, kz); }

private:
    CovarianceSpec spec_;
    Field table_;
};

// Draws centered stationary Gaussian fields with the grid-discretized
// covariance. Spectral coefficients are c_k = scale * sqrt(S_k L^3) z_k with
// z_k complex standard normal, Hermitian-paired so the synthesized field is
// real. Each z_k is addressed by (seed, step, lane, lower pair index), so
// draws are order-independent and any step is reproducible in isolation.
class GaussianFieldSampler {
public:
    GaussianFieldSampler(const CovarianceSpec& spec, const Grid& grid);
    explicit GaussianFieldSampler(SpectralDensity density);

    const SpectralDensity& density() const { return density_; }
    const Grid& grid() const { return density_.grid(); }

    Spectrum draw_spectrum(std::uint64_t seed, std::uint32_t lane, std::uint32_t step,
                           double scale = 1.0) const;

    Field draw(SpectralTransform& transform, std::uint64_t seed, std::uint32_t lane,
               std::uint32_t step, double scale = 1.0) const;

private:
    SpectralDensity density_;
    std::vector<double> amp_;  // sqrt(S_k * L^3)
};

struct NoiseIncrements {
    Grid grid;
    int steps = 0;  // number of time slices J
    double dt = 0.0;
    std::uint64_t seed = 0;
    // j-th entry: centered Gaussian field, covariance dt * Gamma_grid,
    // independent across j.
    std::vector<Field> increments;
};

// One stationary field draw with the Gamma-discretized covariance.
Field sample_field(const CovarianceSpec& spec, const Grid& grid, std::uint64_t seed);

// J independent increments distributed as sqrt(dt) times a field draw; the
// j-th stream depends only on (seed, j), never on J.
NoiseIncrements noise_increments(const CovarianceSpec& spec, const Grid& grid, int steps,
                                 double dt, std::uint64_t seed);

// Lattice covariance C(r) = (1/L^3) sum_k S_k e^{i xi_k . r}, evaluated by one
// inverse transform. Entry (ix,iy,iz) is the covariance at lag (ix,iy,iz)*dx.
Field covariance_table(const SpectralDensity& density, SpectralTransform& transform);

// Inner product of the noise's reproducing-kernel space in spectral form:
//   <g, h> = (1/L^3) sum_k S_k Re( g_k conj(h_k) ),
// equal to the double real-space sum dx^6 sum_{x,y} g(x) C(x-y) h(y).
double rkhs_inner(const SpectralDensity& density, const Spectrum& g, const Spectrum& h);
double rkhs_norm_sq(const SpectralDensity& density, const Spectrum& g);

}  // namespace swe
