#include "swe/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <stdexcept>

namespace swe {

namespace {
// FFTW's planner mutates global state; creation and destruction must be
// serialized. Execution on distinct buffers is thread-safe.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

SpectralTransform::SpectralTransform(const Grid& g) : grid_(g) {
    const std::size_t n3 = g.size();
    buf_ = reinterpret_cast<std::complex<double>*>(fftw_malloc(sizeof(fftw_complex) * n3));
    if (!buf_) throw std::runtime_error("SpectralTransform: allocation failed");
    auto* b = reinterpret_cast<fftw_complex*>(buf_);
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan_fwd_ = fftw_plan_dft_3d(g.n, g.n, g.n, b, b, FFTW_FORWARD, FFTW_ESTIMATE);
    plan_bwd_ = fftw_plan_dft_3d(g.n, g.n, g.n, b, b, FFTW_BACKWARD, FFTW_ESTIMATE);
    if (!plan_fwd_ || !plan_bwd_) throw std::runtime_error("SpectralTransform: planning failed");
}

SpectralTransform::~SpectralTransform() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
    fftw_destroy_plan(static_cast<fftw_plan>(plan_bwd_));
    fftw_free(buf_);
}

Spectrum SpectralTransform::to_spectrum(const Field& f) {
    if (!(f.grid == grid_))
        throw std::invalid_argument("to_spectrum: field grid does not match transform grid");
    const std::size_t n3 = grid_.size();
    const double w = grid_.dx() * grid_.dx() * grid_.dx();
    for (std::size_t i = 0; i < n3; ++i) buf_[i] = {f.v[i], 0.0};
    fftw_execute(static_cast<fftw_plan>(plan_fwd_));
    Spectrum s(grid_);
    for (std::size_t i = 0; i < n3; ++i) s.c[i] = buf_[i] * w;
    return s;
}

Field SpectralTransform::to_field(const Spectrum& s, double* imag_residue) {
    if (!(s.grid == grid_))
        throw std::invalid_argument("to_field: spectrum grid does not match transform grid");
    const std::size_t n3 = grid_.size();
    const double w = 1.0 / (grid_.L * grid_.L * grid_.L);
    for (std::size_t i = 0; i < n3; ++i) buf_[i] = s.c[i];
    fftw_execute(static_cast<fftw_plan>(plan_bwd_));
    Field f(grid_);
    double resid = 0.0;
    for (std::size_t i = 0; i < n3; ++i) {
        f.v[i] = buf_[i].real() * w;
        resid = std::max(resid, std::fabs(buf_[i].imag()) * w);
    }
    if (imag_residue) *imag_residue = resid;
    return f;
}

std::size_t SpectralTransform::conjugate_index(const Grid& g, std::size_t m) {
    const int n = g.n;
    const int ix = static_cast<int>(m % n);
    const int iy = static_cast<int>((m / n) % n);
    const int iz = static_cast<int>(m / (static_cast<std::size_t>(n) * n));
    const int cx = (n - ix) % n, cy = (n - iy) % n, cz = (n - iz) % n;
    return g.index(cx, cy, cz);
}

double SpectralTransform::hermitian_residue(const Spectrum& s) {
    double r = 0.0;
    const std::size_t n3 = s.grid.size();
    for (std::size_t m = 0; m < n3; ++m) {
        const std::size_t mc = conjugate_index(s.grid, m);
        r = std::max(r, std::abs(s.c[m] - std::conj(s.c[mc])));
    }
    return r;
}

}  // namespace swe
