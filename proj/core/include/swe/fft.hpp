// FFT bridge between lattice fields and physically normalized spectra.
//
// Conventions (fixed project-wide):
//   to_spectrum:  c_k = dx^3 * sum_x f(x) e^{-i xi_k . x}     ~ int f e^{-i xi x} dx
//   to_field:     f(x) = (1/L^3) * sum_k c_k e^{+i xi_k . x}  ~ (2pi)^-3 int c e^{+i xi x} dxi
// so the pair is an exact inverse on the lattice, and (1/L^3) sum_k plays the
// role of (2pi)^-3 int dxi (the mode cell has frequency volume (2pi/L)^3).
//
// Plans use FFTW_ESTIMATE deliberately: measured plans may select different
// algorithms between runs, which would break bitwise reproducibility of every
// downstream Monte Carlo artifact.
#pragma once

#include "swe/grid.hpp"

#include <complex>
#include <vector>

namespace swe {

class SpectralTransform {
public:
    explicit SpectralTransform(const Grid& g);
    ~SpectralTransform();
    SpectralTransform(const SpectralTransform&) = delete;
    SpectralTransform& operator=(const SpectralTransform&) = delete;

    const Grid& grid() const { return grid_; }

    Spectrum to_spectrum(const Field& f);

    // Inverse transform; imag_residue (if given) receives max |Im| over the
    // box, which is roundoff-size for Hermitian-symmetric input.
    Field to_field(const Spectrum& s, double* imag_residue = nullptr);

    // Conjugate partner of a linear mode index (componentwise k -> -k mod N).
    static std::size_t conjugate_index(const Grid& g, std::size_t m);

    // max_k |c_k - conj(c_{-k})|, the Hermitian symmetry defect.
    static double hermitian_residue(const Spectrum& s);

private:
    Grid grid_;
    void* plan_fwd_;   // fftw_plan
    void* plan_bwd_;
    std::complex<double>* buf_;  // fftw-aligned scratch, n^3 entries
};

}  // namespace swe
