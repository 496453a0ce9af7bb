#include "swe/kernel.hpp"

#include "swe/numerics.hpp"

#include <cmath>
#include <stdexcept>

namespace swe {

namespace {
constexpr double pi = 3.14159265358979323846;
}

InitialData::InitialData(Field position_, Field velocity_, double laplacian_holder_,
                         double velocity_holder_)
    : position(std::move(position_)),
      velocity(std::move(velocity_)),
      laplacian_holder(laplacian_holder_),
      velocity_holder(velocity_holder_) {
    if (!(position.grid == velocity.grid))
        throw std::invalid_argument("InitialData: position/velocity grid mismatch");
    if (!position.all_finite() || !velocity.all_finite())
        throw std::invalid_argument("InitialData: fields must be finite");
    if (!(laplacian_holder > 0.0 && laplacian_holder <= 1.0) ||
        !(velocity_holder > 0.0 && velocity_holder <= 1.0))
        throw std::invalid_argument("InitialData: Holder exponents must lie in (0, 1]");
}

double kernel_multiplier(double t, double xi_norm) {
    if (t < 0.0) throw std::invalid_argument("kernel_multiplier: t must be >= 0");
    double a = t * xi_norm;
    // Relative scale below which sin(a)/xi = t to double precision.
    if (a < 1e-8) return t * (1.0 - a * a / 6.0);
    return std::sin(a) / xi_norm;
}

ModePropagator propagator(double t, double xi_norm) {
    double a = t * xi_norm;
    ModePropagator p;
    p.pp = p.vv = std::cos(a);
    p.pv = kernel_multiplier(std::abs(t), xi_norm);
    if (t < 0.0) p.pv = -p.pv;
    p.vp = -xi_norm * std::sin(a);
    return p;
}

namespace {

void check_horizon(const Grid& grid, double t) {
    if (t < 0.0) throw std::invalid_argument("homogeneous_solution: t must be >= 0");
    if (!(t < grid.L / 4.0))
        throw std::invalid_argument(
            "homogeneous_solution: t >= L/4 would let wraparound reach the "
            "observation region");
}

}  // namespace

Field homogeneous_solution(const InitialData& init, const Grid& grid, double t) {
    return homogeneous_pair(init, grid, t).position;
}

FieldPair homogeneous_pair(const InitialData& init, const Grid& grid, double t) {
    if (!(init.position.grid == grid))
        throw std::invalid_argument("homogeneous_pair: grid mismatch");
    check_horizon(grid, t);
    SpectralTransform tr(grid);
    Spectrum pos = tr.to_spectrum(init.position);
    Spectrum vel = tr.to_spectrum(init.velocity);
    Spectrum pos_t(grid), vel_t(grid);
    for (int iz = 0; iz < grid.n; ++iz)
        for (int iy = 0; iy < grid.n; ++iy)
            for (int ix = 0; ix < grid.n; ++ix) {
                double fx = grid.freq(ix), fy = grid.freq(iy), fz = grid.freq(iz);
                double w = std::sqrt(fx * fx + fy * fy + fz * fz);
                ModePropagator p = propagator(t, w);
                std::size_t m = grid.index(ix, iy, iz);
                pos_t.c[m] = p.pp * pos.c[m] + p.pv * vel.c[m];
                vel_t.c[m] = p.vp * pos.c[m] + p.vv * vel.c[m];
            }
    FieldPair out{tr.to_field(pos_t), tr.to_field(vel_t)};
    return out;
}

namespace {

// int_0^1 sin^2(s) s^{beta-3} ds by the alternating series of sin^2:
// sin^2 s = sum_{k>=1} (-1)^{k+1} 2^{2k-1} s^{2k} / (2k)!.
double head_series(double beta) {
    double sum = 0.0, coef = 0.5;  // coef = 2^{2k-1}/(2k)! starting at k=1
    for (int k = 1; k <= 16; ++k) {
        coef *= 4.0 / ((2 * k) * (2 * k - 1));
        double term = coef / (2 * k + beta - 2.0);
        sum += (k % 2 == 1) ? term : -term;
        if (coef < 1e-19) break;
    }
    return sum;
}

// int_R^inf cos(2s) s^p ds by repeated integration by parts, each pass
// trading a power of s for a factor p/2; truncated when the prefactor and
// R^{p-k} make the remainder negligible.
double tail_cos_power(double R, double p) {
    // Unroll the coupled recursion
    //   C(p) = -sin(2R) R^p / 2 - (p/2) S(p-1)
    //   S(p) = cos(2R) R^p / 2 + (p/2) C(p-1)
    // to depth 12.
    double c = 0.0, s = 0.0;
    for (int k = 11; k >= 0; --k) {
        double pk = p - k;
        double rp = std::pow(R, pk);
        double c_new = -std::sin(2.0 * R) * rp / 2.0 - 0.5 * pk * s;
        double s_new = std::cos(2.0 * R) * rp / 2.0 + 0.5 * pk * c;
        c = c_new;
        s = s_new;
    }
    return c;
}

}  // namespace

double dalang_integral(const CovarianceSpec& spec, double t) {
    if (!spec.phi.is_constant())
        throw std::invalid_argument(
            "dalang_integral: defined for flat modulation (radial density) only");
    if (!(t > 0.0)) throw std::invalid_argument("dalang_integral: t must be > 0");
    const double beta = spec.beta;
    // Radial reduction with s = t|xi|:
    //   value = normalization/(2 pi^2) * t^{2-beta} * int_0^inf sin^2(s) s^{beta-3} ds.
    const double R = 40.0;
    double mid = num::adaptive_simpson(
        [beta](double s) {
            double si = std::sin(s);
            return si * si * std::pow(s, beta - 3.0);
        },
        1.0, R, 1e-13);
    double tail = std::pow(R, beta - 2.0) / (2.0 * (2.0 - beta)) -
                  0.5 * tail_cos_power(R, beta - 3.0);
    double radial = head_series(beta) + mid + tail;
    return spec.normalization / (2.0 * pi * pi) * std::pow(t, 2.0 - beta) * radial;
}

double mollifier_transform(double u) {
    static const num::Quadrature q = num::gauss_legendre(96, 0.0, 1.0);
    static const double z_norm = [] {
        double z = 0.0;
        for (std::size_t i = 0; i < q.x.size(); ++i) {
            double r = q.x[i];
            z += q.w[i] * r * r * std::exp(-1.0 / (1.0 - r * r));
        }
        return 4.0 * pi * z;
    }();
    double acc = 0.0;
    for (std::size_t i = 0; i < q.x.size(); ++i) {
        double r = q.x[i];
        double a = u * r;
        double sinc = std::abs(a) < 1e-8 ? 1.0 - a * a / 6.0 : std::sin(a) / a;
        acc += q.w[i] * r * r * std::exp(-1.0 / (1.0 - r * r)) * sinc;
    }
    return 4.0 * pi * acc / z_norm;
}

double mollified_multiplier(int n, double t, double xi_norm) {
    if (n < 1) throw std::invalid_argument("mollified_multiplier: n must be >= 1");
    if (!(t > 0.0)) throw std::invalid_argument("mollified_multiplier: t must be > 0");
    return mollifier_transform(xi_norm * t / n) * kernel_multiplier(t, xi_norm);
}

}  // namespace swe
