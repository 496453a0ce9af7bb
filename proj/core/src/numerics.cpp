#include "swe/numerics.hpp"

#include <cmath>
#include <stdexcept>

namespace swe::num {

Quadrature gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: need n >= 1");
    Quadrature q;
    q.x.resize(n);
    q.w.resize(n);
    // Newton on P_n with the usual Chebyshev-like initial guess. Nodes come
    // in +/- pairs; compute the lower half and mirror.
    const double pi = 3.14159265358979323846;
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            // Recurrence for P_n(x) and P_{n-1}(x).
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            pp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        q.x[i] = -x;
        q.x[n - 1 - i] = x;
        double w = 2.0 / ((1.0 - x * x) * pp * pp);
        q.w[i] = w;
        q.w[n - 1 - i] = w;
    }
    return q;
}

Quadrature gauss_legendre(int n, double a, double b) {
    Quadrature q = gauss_legendre(n);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (int i = 0; i < n; ++i) {
        q.x[i] = mid + half * q.x[i];
        q.w[i] *= half;
    }
    return q;
}

namespace {

double simpson(double a, double fa, double b, double fb, double fm) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double simpson_rec(const std::function<double(double)>& f, double a, double fa, double b,
                   double fb, double m, double fm, double whole, double tol, int depth) {
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = simpson(a, fa, m, fm, flm);
    double right = simpson(m, fm, b, fb, frm);
    double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
           simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol, int max_depth) {
    if (a == b) return 0.0;
    double fa = f(a), fb = f(b), m = 0.5 * (a + b), fm = f(m);
    double whole = simpson(a, fa, b, fb, fm);
    return simpson_rec(f, a, fa, b, fb, m, fm, whole, tol, max_depth);
}

double riesz_constant(double beta) {
    if (!(beta > 0.0 && beta < 3.0))
        throw std::invalid_argument("riesz_constant: beta must lie in (0, 3)");
    const double pi = 3.14159265358979323846;
    return std::pow(2.0, 3.0 - beta) * std::pow(pi, 1.5) *
           std::exp(std::lgamma(0.5 * (3.0 - beta)) - std::lgamma(0.5 * beta));
}

double cube_integral(double p) {
    if (!(p > 0.0)) throw std::invalid_argument("cube_integral: need p > 0");
    // 64^2 tensor points resolve the face integrand to full double accuracy
    // for the exponents in play (|p-3| < 3).
    static const Quadrature q = gauss_legendre(64, -1.0, 1.0);
    double face = 0.0;
    for (size_t i = 0; i < q.x.size(); ++i) {
        double row = 0.0;
        for (size_t j = 0; j < q.x.size(); ++j) {
            double r2 = 1.0 + q.x[i] * q.x[i] + q.x[j] * q.x[j];
            row += q.w[j] * std::pow(r2, 0.5 * (p - 3.0));
        }
        face += q.w[i] * row;
    }
    return 6.0 / p * face;
}

double normal_tail(double z) {
    return 0.5 * std::erfc(z / 1.4142135623730951);
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y,
                 const std::vector<double>& w) {
    if (x.size() != y.size() || x.size() != w.size() || x.size() < 2)
        throw std::invalid_argument("fit_line: need matching arrays, size >= 2");
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sw += w[i];
        sx += w[i] * x[i];
        sy += w[i] * y[i];
        sxx += w[i] * x[i] * x[i];
        sxy += w[i] * x[i] * y[i];
    }
    double det = sw * sxx - sx * sx;
    if (det == 0.0) throw std::invalid_argument("fit_line: degenerate abscissae");
    LineFit fit;
    fit.slope = (sw * sxy - sx * sy) / det;
    fit.intercept = (sy * sxx - sx * sxy) / det;
    return fit;
}

}  // namespace swe::num
