// The 3-D wave propagator on the frequency lattice: the sin(t|xi|)/|xi|
// multiplier, the full position/velocity rotation, free evolution of initial
// data, the smoothed (mollified) multiplier, and the spectral energy integral
// that controls solution variance.
#pragma once

#include "swe/covariance.hpp"
#include "swe/fft.hpp"
#include "swe/grid.hpp"

namespace swe {

struct InitialData {
    Field position;            // the wave's initial displacement
    Field velocity;            // its initial time derivative
    double laplacian_holder;   // declared Holder exponent of the displacement's
                               // Laplacian, in ]0,1] (regularity metadata)
    double velocity_holder;    // declared Holder exponent of the velocity

    InitialData(Field position, Field velocity, double laplacian_holder = 1.0,
                double velocity_holder = 1.0);
};

// sin(t|xi|)/|xi|, continuously extended to t at xi = 0. Satisfies
// |value| <= t for every frequency.
double kernel_multiplier(double t, double xi_norm);

// Entries of the per-mode free propagator over a time t:
//   [pos'; vel'] = [[pp, pv], [vp, vv]] [pos; vel]
// with pp = vv = cos(t w), pv = sin(t w)/w, vp = -w sin(t w), w = |xi|.
struct ModePropagator {
    double pp, pv, vp, vv;
};
ModePropagator propagator(double t, double xi_norm);

// Free wave evolution of the initial data at time t, spectrally:
//   position_hat(t) = cos(t|xi|) pos_hat + m(t,xi) vel_hat.
// t must satisfy 0 <= t < L/4 so that no wraparound can reach points whose
// distance to a source is measured within the box.
Field homogeneous_solution(const InitialData& init, const Grid& grid, double t);

struct FieldPair {
    Field position, velocity;
};
// Position and velocity of the free evolution (velocity via the bottom row of
// the propagator; no finite differencing anywhere).
FieldPair homogeneous_pair(const InitialData& init, const Grid& grid, double t);

// Spectral integral  (2pi)^-3 int S(xi) (sin(t|xi|)/|xi|)^2 dxi  over all of
// frequency space (continuum, by adaptive radial quadrature), for flat
// modulation. Finite exactly for beta in (0,2); scales as t^{2-beta}.
double dalang_integral(const CovarianceSpec& spec, double t);

// Radial Fourier transform psi_hat(|xi|) of the unit-mass C-infinity bump
// psi(x) = exp(-1/(1-|x|^2)) / Z on the unit ball; psi_hat(0) = 1.
double mollifier_transform(double u);

// Multiplier of the smoothed kernel: the wave kernel at time t convolved with
// the bump shrunk to radius t/n, i.e. psi_hat(|xi| t / n) * m(t, xi). Keeps
// unit mass (value t at xi = 0) and support inside radius t(1 + 1/n).
double mollified_multiplier(int n, double t, double xi_norm);

}  // namespace swe
