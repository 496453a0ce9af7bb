// Small numerical toolbox shared across modules: Gauss-Legendre rules,
// adaptive Simpson, the Riesz Fourier-pair constant, cube cell averages of
// power-law singularities, and Gaussian tail helpers.
#pragma once

#include <functional>
#include <vector>

namespace swe::num {

struct Quadrature {
    std::vector<double> x, w;  // nodes and weights
};

// n-point Gauss-Legendre rule on [-1, 1].
Quadrature gauss_legendre(int n);

// Same rule mapped to [a, b].
Quadrature gauss_legendre(int n, double a, double b);

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol, int max_depth = 40);

// c(beta) with  F[|x|^{-beta}](xi) = c(beta) |xi|^{beta-3}  in 3-D,
// convention F g = int g e^{-i xi.x} dx. Closed form
//   c(beta) = 2^{3-beta} pi^{3/2} Gamma((3-beta)/2) / Gamma(beta/2),
// valid on 0 < beta < 3; c(1) = 4pi (Coulomb), c(2) = 2pi^2.
double riesz_constant(double beta);

// int_{[-1,1]^3} |u|^{p-3} du  for p > 0. Used for two cell averages: the
// spectral zero-mode (p = beta) and the real-space origin cell (p = 3-beta).
// Evaluated by projecting the radial integral onto the cube faces:
//   (6/p) * int_{[-1,1]^2} (1 + x^2 + y^2)^{(p-3)/2} dx dy,
// a smooth integrand, so tensor Gauss-Legendre converges fast.
double cube_integral(double p);

// Upper Gaussian tail P(Z >= z) for Z ~ N(0,1).
double normal_tail(double z);

// Weighted least squares y ~ a + b x; returns {intercept, slope}.
struct LineFit {
    double intercept = 0.0, slope = 0.0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y,
                 const std::vector<double>& w);

}  // namespace swe::num
