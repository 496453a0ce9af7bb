#pragma once

// Pathwise regularity instruments: light-cone regions, the admissible Holder
// exponent range, discrete Holder and fractional Sobolev norms, continuity
// moduli, and the ensemble increment-exponent estimator.

#include "swe/covariance.hpp"
#include "swe/grid.hpp"
#include "swe/kernel.hpp"
#include "swe/solver.hpp"

#include <array>
#include <cstddef>
#include <functional>
#include <vector>

namespace swe {

// An axis-aligned observation box D inside the grid, together with the
// backward light cones K_a(t) = {y : dist(y, D) <= a (T - t)} it casts.
// Distances are periodic (minimal image), so the cone masks respect the
// torus geometry.
class Region {
public:
    // Inclusive index bounds per axis, 0 <= lo <= hi < n.
    Region(const Grid& grid, std::array<int, 3> lo, std::array<int, 3> hi);

    const Grid& grid() const { return grid_; }
    const std::array<int, 3>& lo() const { return lo_; }
    const std::array<int, 3>& hi() const { return hi_; }

    bool contains(std::size_t site) const { return inside_[site] != 0; }
    const std::vector<std::size_t>& box_indices() const { return box_; }
    std::size_t box_size() const { return box_.size(); }

    // Periodic Euclidean distance from a site to the box.
    double distance(std::size_t site) const { return dist_[site]; }

    // Sites within distance a (T - t) of the box; at t = T exactly the box.
    std::vector<std::size_t> cone_indices(double t, double horizon, double a = 1.0) const;

private:
    Grid grid_;
    std::array<int, 3> lo_{}, hi_{};
    std::vector<std::size_t> box_;
    std::vector<unsigned char> inside_;
    std::vector<double> dist_;
};

// The guaranteed Holder range ]0, upper[ for sample paths: the minimum of the
// initial-data exponents, the noise roughness term (2 - beta)/2, and the
// correlation-decay term (1 + delta)/2.
struct ExponentInterval {
    double gamma1 = 1.0;
    double gamma2 = 1.0;
    double beta = 1.0;
    double delta = 1.0;

    ExponentInterval(double gamma1, double gamma2, double beta, double delta);
    ExponentInterval(const InitialData& init, const CovarianceSpec& cov);

    double upper() const;
};

// Default cap on explicit space-time pairs; past it the norms switch to the
// deterministic lag-stratified sampler.
inline constexpr std::size_t kDefaultPairBudget = 10'000'000;

// Discrete Holder norm over [0, T] x D in the additive gauge |dt| + |dx|:
// the sup norm plus the sup of |g(p) - g(q)| / gauge(p, q)^alpha over sampled
// pairs. Exhaustive when the pair count fits the budget, otherwise an
// exhaustive minimal-lag sweep plus stratified seeded draws across lag
// scales (fully deterministic; no ambient randomness).
double holder_norm(const Trajectory& traj, double alpha, const Region& region,
                   std::size_t pair_budget = kDefaultPairBudget);

// Continuity modulus O_g(delta): the alpha'-ratio sup restricted to pairs
// with gauge < delta, one value per requested delta (same sampled pair set
// for every delta, so the result is nondecreasing in delta).
std::vector<double> modulus(const Trajectory& traj, double alpha_prime,
                            const std::vector<double>& deltas, const Region& region,
                            std::size_t pair_budget = kDefaultPairBudget);

// Fractional Sobolev norm W^{gamma,q} of a field over the region box: the
// L^q part plus the double-sum seminorm with kernel |x - y|^{-(3 + gamma q)}
// (diagonal excluded, cell-volume weights, periodic distances), combined as
// (L^q part^q + seminorm^q)^{1/q}. Evaluated by offset classes, exactly.
double sobolev_norm(const Field& field, double gamma, double q, const Region& region);

struct SpaceTimeLag {
    int dj = 0;                   // time-level offset
    std::array<int, 3> dsite{};   // lattice offset

    static SpaceTimeLag space(int cx, int cy, int cz) { return {0, {cx, cy, cz}}; }
    static SpaceTimeLag time(int dj) { return {dj, {0, 0, 0}}; }
};

struct IncrementFit {
    double alpha_hat = 0.0;  // fitted moment slope divided by q
    double ci_lo = 0.0;      // bootstrap 95% band for alpha_hat
    double ci_hi = 0.0;
    std::vector<double> gauges;     // physical lag sizes |dj| dt + |dsite| dx
    std::vector<double> moments;    // ensemble mean q-th increment moment per lag
    std::vector<double> residuals;  // log-scale fit residual per lag
};

// Empirical increment scaling: for each lag, the mean q-th absolute moment
// of u(t + s, x + z) - u(t, x) over cone-interior points and all valid time
// levels, averaged over an ensemble; alpha_hat is the weighted log-log slope
// over lags divided by q, with a trajectory bootstrap CI. The generator form
// streams trajectories so the ensemble never resides in memory at once.
IncrementFit increment_exponent(int trajectories,
                                const std::function<Trajectory(int)>& make,
                                double q, const std::vector<SpaceTimeLag>& lags,
                                const Region& region);

IncrementFit increment_exponent(const std::vector<Trajectory>& ensemble, double q,
                                const std::vector<SpaceTimeLag>& lags,
                                const Region& region);

}  // namespace swe
