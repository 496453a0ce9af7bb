#include "swe/regularity.hpp"

#include "swe/numerics.hpp"
#include "swe/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace swe {

namespace {

// Periodic index distance from c to the inclusive interval [lo, hi].
int axis_gap(int c, int lo, int hi, int n) {
    if (c >= lo && c <= hi) return 0;
    int d;
    if (c < lo)
        d = std::min(lo - c, c + n - hi);
    else
        d = std::min(c - hi, lo + n - c);
    return d;
}

}  // namespace

Region::Region(const Grid& grid, std::array<int, 3> lo, std::array<int, 3> hi)
    : grid_(grid), lo_(lo), hi_(hi) {
    for (int a = 0; a < 3; ++a)
        if (lo[a] < 0 || hi[a] < lo[a] || hi[a] >= grid.n)
            throw std::invalid_argument("Region: box bounds must satisfy 0 <= lo <= hi < n");
    inside_.assign(grid.size(), 0);
    dist_.resize(grid.size());
    const double dx = grid.dx();
    for (int iz = 0; iz < grid.n; ++iz)
        for (int iy = 0; iy < grid.n; ++iy)
            for (int ix = 0; ix < grid.n; ++ix) {
                std::size_t m = grid.index(ix, iy, iz);
                int gx = axis_gap(ix, lo[0], hi[0], grid.n);
                int gy = axis_gap(iy, lo[1], hi[1], grid.n);
                int gz = axis_gap(iz, lo[2], hi[2], grid.n);
                dist_[m] = dx * std::sqrt(double(gx) * gx + double(gy) * gy +
                                          double(gz) * gz);
                if (gx == 0 && gy == 0 && gz == 0) {
                    inside_[m] = 1;
                    box_.push_back(m);
                }
            }
}

std::vector<std::size_t> Region::cone_indices(double t, double horizon, double a) const {
    if (!(a >= 1.0)) throw std::invalid_argument("Region: cone speed factor needs a >= 1");
    if (!(t >= 0.0) || !(t <= horizon))
        throw std::invalid_argument("Region: cone time outside [0, T]");
    const double radius = a * (horizon - t) + 1e-12 * grid_.L;
    std::vector<std::size_t> out;
    for (std::size_t m = 0; m < dist_.size(); ++m)
        if (dist_[m] <= radius) out.push_back(m);
    return out;
}

ExponentInterval::ExponentInterval(double g1, double g2, double b, double d)
    : gamma1(g1), gamma2(g2), beta(b), delta(d) {
    if (!(gamma1 > 0.0) || gamma1 > 1.0 || !(gamma2 > 0.0) || gamma2 > 1.0)
        throw std::invalid_argument("ExponentInterval: data exponents must lie in (0, 1]");
    if (!(beta > 0.0) || !(beta < 2.0))
        throw std::invalid_argument("ExponentInterval: beta must lie in (0, 2)");
    if (!(delta > 0.0) || delta > 1.0)
        throw std::invalid_argument("ExponentInterval: delta must lie in (0, 1]");
}

ExponentInterval::ExponentInterval(const InitialData& init, const CovarianceSpec& cov)
    : ExponentInterval(init.laplacian_holder, init.velocity_holder, cov.beta,
                       cov.phi.delta) {}

double ExponentInterval::upper() const {
    return std::min(std::min(gamma1, gamma2),
                    std::min(0.5 * (2.0 - beta), 0.5 * (1.0 + delta)));
}

namespace {

constexpr std::uint64_t kPairSeed = 0x70616972736574ULL;  // fixed sampler stream
constexpr std::uint64_t kBootSeed = 0x626f6f7473ULL;      // fixed bootstrap stream

// Streams space-time point pairs from [0, T] x D to a visitor
// fn(gauge, |g(p) - g(q)|). Exhaustive when the pair count fits the budget;
// otherwise an exhaustive (possibly strided) minimal-lag sweep plus
// lag-stratified seeded draws.
template <class F>
void visit_pairs(const Trajectory& traj, const Region& region,
                 std::size_t budget, F&& fn) {
    const Grid& g = region.grid();
    const std::vector<std::size_t>& box = region.box_indices();
    const std::size_t levels = traj.position.size();
    const std::size_t nbox = box.size();
    const std::size_t npts = levels * nbox;
    const double dx = g.dx();
    const double dt = traj.dt;

    auto coords = [&](std::size_t m) {
        int ix = static_cast<int>(m % g.n);
        int iy = static_cast<int>((m / g.n) % g.n);
        int iz = static_cast<int>(m / (static_cast<std::size_t>(g.n) * g.n));
        return std::array<int, 3>{ix, iy, iz};
    };
    auto site_dist = [&](std::size_t m1, std::size_t m2) {
        auto c1 = coords(m1), c2 = coords(m2);
        double s = 0.0;
        for (int a = 0; a < 3; ++a) {
            int d = std::abs(c1[a] - c2[a]);
            d = std::min(d, g.n - d);
            s += double(d) * d;
        }
        return dx * std::sqrt(s);
    };
    auto value = [&](std::size_t j, std::size_t m) { return traj.position[j].v[m]; };

    const double half_pairs = 0.5 * double(npts) * double(npts - 1);
    if (half_pairs <= double(budget)) {
        for (std::size_t p = 0; p < npts; ++p) {
            std::size_t j1 = p / nbox, b1 = p % nbox;
            double v1 = value(j1, box[b1]);
            for (std::size_t q = p + 1; q < npts; ++q) {
                std::size_t j2 = q / nbox, b2 = q % nbox;
                double gauge = dt * double(j2 - j1) + site_dist(box[b1], box[b2]);
                if (gauge <= 0.0) continue;
                fn(gauge, std::abs(v1 - value(j2, box[b2])));
            }
        }
        return;
    }

    // Minimal-lag sweep: axis neighbors at equal times, equal sites at
    // adjacent times. Strided if even this overflows half the budget.
    {
        std::size_t sweep_total = levels * nbox * 4;
        std::size_t stride = 1;
        if (sweep_total > budget / 2) stride = sweep_total / (budget / 2) + 1;
        std::size_t counter = 0;
        for (std::size_t j = 0; j < levels; ++j)
            for (std::size_t b = 0; b < nbox; ++b) {
                std::size_t m = box[b];
                auto c = coords(m);
                for (int axis = 0; axis < 4; ++axis) {
                    if (counter++ % stride != 0) continue;
                    if (axis == 3) {
                        if (j + 1 >= levels) continue;
                        fn(dt, std::abs(value(j, m) - value(j + 1, m)));
                    } else {
                        auto c2 = c;
                        c2[axis] = (c2[axis] + 1) % g.n;
                        std::size_t m2 = g.index(c2[0], c2[1], c2[2]);
                        if (!region.contains(m2)) continue;
                        fn(dx, std::abs(value(j, m) - value(j, m2)));
                    }
                }
            }
    }

    // Stratified draws: shell exponent picks the lag scale, offsets are
    // uniform within the shell box, invalid candidates are skipped.
    int emax = 0;
    while ((std::size_t(1) << (emax + 1)) < std::max(levels, std::size_t(g.n)))
        ++emax;
    const std::size_t ndraws = budget / 2;
    for (std::size_t i = 0; i < ndraws; ++i) {
        auto idx = [&](std::uint64_t mode, std::uint64_t bound) {
            return rng::uniform_index(kPairSeed, static_cast<std::uint32_t>(i),
                                      rng::LANE_PAIR_SAMPLE, mode, bound);
        };
        std::size_t j1 = idx(0, levels);
        std::size_t b1 = idx(1, nbox);
        int span = 1 << idx(2, static_cast<std::uint64_t>(emax) + 1);
        int ox = static_cast<int>(idx(3, 2 * span + 1)) - span;
        int oy = static_cast<int>(idx(4, 2 * span + 1)) - span;
        int oz = static_cast<int>(idx(5, 2 * span + 1)) - span;
        int oj = static_cast<int>(idx(6, 2 * span + 1)) - span;
        long long j2 = static_cast<long long>(j1) + oj;
        if (j2 < 0 || j2 >= static_cast<long long>(levels)) continue;
        auto c = coords(box[b1]);
        int nx = ((c[0] + ox) % g.n + g.n) % g.n;
        int ny = ((c[1] + oy) % g.n + g.n) % g.n;
        int nz = ((c[2] + oz) % g.n + g.n) % g.n;
        std::size_t m2 = g.index(nx, ny, nz);
        if (!region.contains(m2)) continue;
        double gauge = dt * std::abs(oj) + site_dist(box[b1], m2);
        if (gauge <= 0.0) continue;
        fn(gauge, std::abs(value(j1, box[b1]) - value(static_cast<std::size_t>(j2), m2)));
    }
}

void check_traj_region(const Trajectory& traj, const Region& region) {
    if (traj.position.empty())
        throw std::invalid_argument("regularity: trajectory holds no snapshots");
    if (!(traj.position.front().grid == region.grid()))
        throw std::invalid_argument("regularity: trajectory and region grids differ");
}

double abs_pow(double a, double q) {
    a = std::abs(a);
    if (q == 1.0) return a;
    if (q == 2.0) return a * a;
    if (q == 3.0) return a * a * a;
    if (q == 4.0) return (a * a) * (a * a);
    return std::pow(a, q);
}

}  // namespace

double holder_norm(const Trajectory& traj, double alpha, const Region& region,
                   std::size_t pair_budget) {
    if (!(alpha > 0.0) || alpha > 1.0)
        throw std::invalid_argument("holder_norm: alpha must lie in (0, 1]");
    check_traj_region(traj, region);

    double sup = 0.0;
    for (const Field& f : traj.position)
        for (std::size_t m : region.box_indices())
            sup = std::max(sup, std::abs(f.v[m]));

    double semi = 0.0;
    visit_pairs(traj, region, pair_budget, [&](double gauge, double diff) {
        semi = std::max(semi, diff / std::pow(gauge, alpha));
    });
    return sup + semi;
}

std::vector<double> modulus(const Trajectory& traj, double alpha_prime,
                            const std::vector<double>& deltas, const Region& region,
                            std::size_t pair_budget) {
    if (!(alpha_prime > 0.0) || !(alpha_prime < 1.0))
        throw std::invalid_argument("modulus: alpha' must lie in (0, 1)");
    for (double d : deltas)
        if (!(d > 0.0)) throw std::invalid_argument("modulus: deltas must be positive");
    check_traj_region(traj, region);

    std::vector<double> out(deltas.size(), 0.0);
    visit_pairs(traj, region, pair_budget, [&](double gauge, double diff) {
        double ratio = diff / std::pow(gauge, alpha_prime);
        for (std::size_t i = 0; i < deltas.size(); ++i)
            if (gauge < deltas[i]) out[i] = std::max(out[i], ratio);
    });
    return out;
}

double sobolev_norm(const Field& field, double gamma, double q, const Region& region) {
    if (!(gamma > 0.0) || !(gamma < 1.0))
        throw std::invalid_argument("sobolev_norm: gamma must lie in (0, 1)");
    if (!(q >= 1.0)) throw std::invalid_argument("sobolev_norm: q must be >= 1");
    if (!(field.grid == region.grid()))
        throw std::invalid_argument("sobolev_norm: field and region grids differ");

    const Grid& g = field.grid;
    const double dx = g.dx();
    const double dx3 = dx * dx * dx;
    const auto& lo = region.lo();
    const auto& hi = region.hi();

    double lq = 0.0;
    for (std::size_t m : region.box_indices()) lq += abs_pow(field.v[m], q) * dx3;

    // Offset classes: for each nonzero offset the overlap of the box with its
    // shifted copy is again a box, so the inner sum is three nested loops.
    const double kexp = 3.0 + gamma * q;
    double semi = 0.0;
    const int ex = hi[0] - lo[0], ey = hi[1] - lo[1], ez = hi[2] - lo[2];
    for (int oz = -ez; oz <= ez; ++oz)
        for (int oy = -ey; oy <= ey; ++oy)
            for (int ox = -ex; ox <= ex; ++ox) {
                if (ox == 0 && oy == 0 && oz == 0) continue;
                int mx = std::min(std::abs(ox), g.n - std::abs(ox));
                int my = std::min(std::abs(oy), g.n - std::abs(oy));
                int mz = std::min(std::abs(oz), g.n - std::abs(oz));
                double r = dx * std::sqrt(double(mx) * mx + double(my) * my +
                                          double(mz) * mz);
                double acc = 0.0;
                int x0 = std::max(lo[0], lo[0] - ox), x1 = std::min(hi[0], hi[0] - ox);
                int y0 = std::max(lo[1], lo[1] - oy), y1 = std::min(hi[1], hi[1] - oy);
                int z0 = std::max(lo[2], lo[2] - oz), z1 = std::min(hi[2], hi[2] - oz);
                for (int iz = z0; iz <= z1; ++iz)
                    for (int iy = y0; iy <= y1; ++iy)
                        for (int ix = x0; ix <= x1; ++ix) {
                            std::size_t a = g.index(ix, iy, iz);
                            std::size_t b = g.index(ix + ox, iy + oy, iz + oz);
                            acc += abs_pow(field.v[a] - field.v[b], q);
                        }
                semi += acc * dx3 * dx3 / std::pow(r, kexp);
            }

    return std::pow(lq + semi, 1.0 / q);
}

IncrementFit increment_exponent(int trajectories,
                                const std::function<Trajectory(int)>& make,
                                double q, const std::vector<SpaceTimeLag>& lags,
                                const Region& region) {
    if (trajectories < 100)
        throw std::invalid_argument("increment_exponent: need at least 100 trajectories");
    if (lags.size() < 4)
        throw std::invalid_argument("increment_exponent: need at least 4 lags");
    if (!(q >= 1.0)) throw std::invalid_argument("increment_exponent: q must be >= 1");

    const Grid& g = region.grid();
    const double dx = g.dx();
    const std::size_t nlag = lags.size();

    IncrementFit fit;
    std::vector<std::vector<double>> per_traj(trajectories,
                                              std::vector<double>(nlag, 0.0));
    std::vector<long long> counts(nlag, 0);
    std::vector<std::vector<std::size_t>> valid_pts(nlag);  // packed (j, site)
    std::size_t levels = 0;
    double dt = 0.0;

    for (int i = 0; i < trajectories; ++i) {
        Trajectory traj = make(i);
        check_traj_region(traj, region);
        if (i == 0) {
            levels = traj.position.size();
            dt = traj.dt;
            double gmin = 1e300, gmax = 0.0;
            for (const SpaceTimeLag& lag : lags) {
                double s2 = double(lag.dsite[0]) * lag.dsite[0] +
                            double(lag.dsite[1]) * lag.dsite[1] +
                            double(lag.dsite[2]) * lag.dsite[2];
                double gauge = dt * std::abs(lag.dj) + dx * std::sqrt(s2);
                if (!(gauge > 0.0))
                    throw std::invalid_argument("increment_exponent: zero lag");
                fit.gauges.push_back(gauge);
                gmin = std::min(gmin, gauge);
                gmax = std::max(gmax, gauge);
            }
            if (gmax < 10.0 * gmin * (1.0 - 1e-9))
                throw std::invalid_argument(
                    "increment_exponent: lags must span at least a decade");

            // Valid evaluation points per lag: both endpoints inside the
            // cone interior (one cell margin) at their own times.
            const double T = dt * double(levels - 1);
            for (std::size_t l = 0; l < nlag; ++l) {
                const SpaceTimeLag& lag = lags[l];
                for (std::size_t j = 0; j < levels; ++j) {
                    long long j2 = static_cast<long long>(j) + lag.dj;
                    if (j2 < 0 || j2 >= static_cast<long long>(levels)) continue;
                    double thr1 = (T - dt * double(j)) - dx;
                    double thr2 = (T - dt * double(j2)) - dx;
                    for (int iz = 0; iz < g.n; ++iz)
                        for (int iy = 0; iy < g.n; ++iy)
                            for (int ix = 0; ix < g.n; ++ix) {
                                std::size_t m = g.index(ix, iy, iz);
                                if (region.distance(m) > thr1) continue;
                                int nx = ((ix + lag.dsite[0]) % g.n + g.n) % g.n;
                                int ny = ((iy + lag.dsite[1]) % g.n + g.n) % g.n;
                                int nz = ((iz + lag.dsite[2]) % g.n + g.n) % g.n;
                                std::size_t m2 = g.index(nx, ny, nz);
                                if (region.distance(m2) > thr2) continue;
                                valid_pts[l].push_back(j * g.size() + m);
                                valid_pts[l].push_back(
                                    static_cast<std::size_t>(j2) * g.size() + m2);
                            }
                }
                counts[l] = static_cast<long long>(valid_pts[l].size() / 2);
                if (counts[l] == 0)
                    throw std::invalid_argument(
                        "increment_exponent: a lag admits no cone-interior points");
            }
        }
        if (traj.position.size() != levels || traj.dt != dt)
            throw std::invalid_argument(
                "increment_exponent: ensemble members disagree on the time grid");
        for (std::size_t l = 0; l < nlag; ++l) {
            const std::vector<std::size_t>& pts = valid_pts[l];
            double acc = 0.0;
            for (std::size_t p = 0; p < pts.size(); p += 2) {
                std::size_t j1 = pts[p] / g.size(), m1 = pts[p] % g.size();
                std::size_t j2 = pts[p + 1] / g.size(), m2 = pts[p + 1] % g.size();
                acc += abs_pow(traj.position[j1].v[m1] - traj.position[j2].v[m2], q);
            }
            per_traj[i][l] = acc / double(counts[l]);
        }
    }

    fit.moments.assign(nlag, 0.0);
    for (int i = 0; i < trajectories; ++i)
        for (std::size_t l = 0; l < nlag; ++l) fit.moments[l] += per_traj[i][l];
    for (double& m : fit.moments) m /= trajectories;
    for (double m : fit.moments)
        if (!(m > 0.0))
            throw std::runtime_error("increment_exponent: degenerate increment moments");

    // Trajectory bootstrap: resampled moment curves give both the per-lag
    // weights (inverse variance of the log moment) and the alpha CI.
    const int B = 200;
    std::vector<std::vector<double>> boot_logm(B, std::vector<double>(nlag, 0.0));
    for (int b = 0; b < B; ++b) {
        std::vector<double> acc(nlag, 0.0);
        for (int r = 0; r < trajectories; ++r) {
            std::size_t pick = rng::uniform_index(kBootSeed, static_cast<std::uint32_t>(b),
                                                  rng::LANE_BOOTSTRAP, r, trajectories);
            for (std::size_t l = 0; l < nlag; ++l) acc[l] += per_traj[pick][l];
        }
        for (std::size_t l = 0; l < nlag; ++l)
            boot_logm[b][l] = std::log(std::max(acc[l] / trajectories, 1e-300));
    }
    std::vector<double> xs(nlag), ys(nlag), ws(nlag);
    for (std::size_t l = 0; l < nlag; ++l) {
        xs[l] = std::log(fit.gauges[l]);
        ys[l] = std::log(fit.moments[l]);
        double mean = 0.0, var = 0.0;
        for (int b = 0; b < B; ++b) mean += boot_logm[b][l];
        mean /= B;
        for (int b = 0; b < B; ++b) {
            double d = boot_logm[b][l] - mean;
            var += d * d;
        }
        var /= (B - 1);
        ws[l] = 1.0 / std::max(var, 1e-12);
    }
    num::LineFit line = num::fit_line(xs, ys, ws);
    fit.alpha_hat = line.slope / q;
    fit.residuals.resize(nlag);
    for (std::size_t l = 0; l < nlag; ++l)
        fit.residuals[l] = ys[l] - (line.intercept + line.slope * xs[l]);

    std::vector<double> boot_alpha(B);
    for (int b = 0; b < B; ++b) {
        num::LineFit bl = num::fit_line(xs, boot_logm[b], ws);
        boot_alpha[b] = bl.slope / q;
    }
    std::sort(boot_alpha.begin(), boot_alpha.end());
    fit.ci_lo = boot_alpha[static_cast<std::size_t>(0.025 * (B - 1))];
    fit.ci_hi = boot_alpha[static_cast<std::size_t>(std::ceil(0.975 * (B - 1)))];
    return fit;
}

IncrementFit increment_exponent(const std::vector<Trajectory>& ensemble, double q,
                                const std::vector<SpaceTimeLag>& lags,
                                const Region& region) {
    return increment_exponent(
        static_cast<int>(ensemble.size()),
        [&](int i) { return ensemble[static_cast<std::size_t>(i)]; }, q, lags, region);
}

}  // namespace swe
