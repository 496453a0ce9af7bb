// Periodic simulation box [0,L)^3 sampled on an N^3 lattice, plus the real
// scalar fields living on it. Layout is row-major with x fastest:
// index = ix + N*(iy + N*iz).
#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace swe {

struct Grid {
    double L = 0.0;   // box side length
    int n = 0;        // points per dimension, power of two, >= 4

    Grid() = default;
    Grid(double L_, int n_);

    double dx() const { return L / n; }
    std::size_t size() const {
        return static_cast<std::size_t>(n) * n * n;
    }

    std::size_t index(int ix, int iy, int iz) const {
        return static_cast<std::size_t>(ix) +
               static_cast<std::size_t>(n) * (static_cast<std::size_t>(iy) +
               static_cast<std::size_t>(n) * static_cast<std::size_t>(iz));
    }

    // Signed mode number for an array index: 0..N/2-1 stay, N/2..N-1 wrap to
    // -N/2..-1. The frequency lattice is xi_k = (2 pi / L) * k.
    int signed_mode(int i) const { return i < n / 2 ? i : i - n; }
    double freq(int i) const {
        return 2.0 * 3.14159265358979323846 * signed_mode(i) / L;
    }

    // Largest resolved |xi| component, pi*N/L.
    double freq_max() const { return 3.14159265358979323846 * n / L; }

    // Minimal-image signed displacement between lattice offsets, in length units.
    double min_image(double d) const;

    bool operator==(const Grid& o) const { return L == o.L && n == o.n; }
};

struct Field {
    Grid grid;
    std::vector<double> v;

    Field() = default;
    explicit Field(const Grid& g) : grid(g), v(g.size(), 0.0) {}
    Field(const Grid& g, std::vector<double> values);

    double& operator()(int ix, int iy, int iz) { return v[grid.index(ix, iy, iz)]; }
    double operator()(int ix, int iy, int iz) const { return v[grid.index(ix, iy, iz)]; }

    bool all_finite() const;
    double sup_abs() const;
};

// Complex lattice spectrum, same layout as Field. Physical convention:
// coef[k] approximates the continuum transform  int g(x) e^{-i xi_k . x} dx.
struct Spectrum {
    Grid grid;
    std::vector<std::complex<double>> c;

    Spectrum() = default;
    explicit Spectrum(const Grid& g) : grid(g), c(g.size(), {0.0, 0.0}) {}
};

}  // namespace swe
