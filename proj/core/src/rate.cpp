#include "swe/rate.hpp"

#include "swe/fft.hpp"
#include "swe/kernel.hpp"
#include "swe/parallel.hpp"
#include "swe/rng.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>

namespace swe {

EventSpec EventSpec::point_exceed(std::array<int, 3> site, double threshold) {
    EventSpec e;
    e.kind = Kind::PointExceed;
    e.site = site;
    e.threshold = threshold;
    return e;
}

EventSpec EventSpec::sup_exceed(std::vector<std::size_t> region, double threshold) {
    EventSpec e;
    e.kind = Kind::SupExceed;
    e.region = std::move(region);
    e.threshold = threshold;
    return e;
}

EventSpec EventSpec::linear_exceed(Field test_field, double threshold) {
    EventSpec e;
    e.kind = Kind::LinearExceed;
    e.test_field = std::move(test_field);
    e.threshold = threshold;
    return e;
}

void EventSpec::validate(const Grid& grid) const {
    if (!(threshold >= 0.0) || !std::isfinite(threshold))
        throw std::invalid_argument("EventSpec: threshold must be finite and >= 0");
    switch (kind) {
        case Kind::PointExceed:
            for (int c : site)
                if (c < 0 || c >= grid.n)
                    throw std::invalid_argument("EventSpec: site outside the grid");
            break;
        case Kind::SupExceed:
            if (region.empty())
                throw std::invalid_argument("EventSpec: region must be nonempty");
            for (std::size_t m : region)
                if (m >= grid.size())
                    throw std::invalid_argument("EventSpec: region index outside the grid");
            break;
        case Kind::LinearExceed:
            if (!(test_field.grid == grid))
                throw std::invalid_argument("EventSpec: test field on a different grid");
            if (!test_field.all_finite())
                throw std::invalid_argument("EventSpec: test field must be finite");
            break;
    }
}

double lattice_inner(const Field& a, const Field& b) {
    if (!(a.grid == b.grid)) throw std::invalid_argument("lattice_inner: grid mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.v.size(); ++i) acc += a.v[i] * b.v[i];
    double dx = a.grid.dx();
    return acc * dx * dx * dx;
}

EventTracker::EventTracker(const EventSpec& event, const Grid& grid, int steps)
    : event_(event), grid_(grid), steps_(steps) {
    event.validate(grid);
    reset();
}

bool EventTracker::needs_every_step() const {
    return event_.kind == EventSpec::Kind::SupExceed;
}

void EventTracker::reset() {
    value_ = 0.0;
    saw_final_ = false;
}

void EventTracker::offer(int step, const Field& diff) {
    switch (event_.kind) {
        case EventSpec::Kind::PointExceed:
            if (step == steps_) {
                value_ = diff(event_.site[0], event_.site[1], event_.site[2]);
                saw_final_ = true;
            }
            break;
        case EventSpec::Kind::LinearExceed:
            if (step == steps_) {
                value_ = lattice_inner(diff, event_.test_field);
                saw_final_ = true;
            }
            break;
        case EventSpec::Kind::SupExceed:
            for (std::size_t m : event_.region)
                value_ = std::max(value_, std::abs(diff.v[m]));
            if (step == steps_) saw_final_ = true;
            break;
    }
}

double EventTracker::value() const {
    if (!saw_final_)
        throw std::logic_error("EventTracker: final time level was never offered");
    return value_;
}

Trajectory skeleton_solve(const SolverConfig& config, const Control& h) {
    SolverConfig cfg = config;
    cfg.epsilon = 0.0;  // the zero-noise path touches no RNG
    return solve(cfg, &h, 0);
}

double rate_functional(const Control& h) { return 0.5 * h.norm_sq(); }

namespace {

// ---------------------------------------------------------------------------
// Truncated Hermitian parametrization of a control path: for every retained
// conjugate mode pair, two real parameters (a, b) with h_lo = a + ib and
// h_hi = a - ib; self-conjugate modes carry one real parameter.
// ---------------------------------------------------------------------------

struct PairEntry {
    std::size_t lo = 0, hi = 0;
    bool self = false;
};

struct Basis {
    std::vector<PairEntry> pairs;
    int per_step = 0;
    int steps = 0;
    std::size_t size() const { return static_cast<std::size_t>(per_step) * steps; }
};

Basis make_basis(const Grid& g, int truncation, int steps) {
    if (truncation < 1) throw std::invalid_argument("minimize_rate: truncation must be >= 1");
    int half = truncation / 2;
    if (half > g.n / 2) half = g.n / 2;
    std::vector<std::size_t> modes;
    auto wrap = [&](int c) { return (c % g.n + g.n) % g.n; };
    for (int cz = -half; cz <= half; ++cz)
        for (int cy = -half; cy <= half; ++cy)
            for (int cx = -half; cx <= half; ++cx)
                modes.push_back(g.index(wrap(cx), wrap(cy), wrap(cz)));
    std::sort(modes.begin(), modes.end());
    modes.erase(std::unique(modes.begin(), modes.end()), modes.end());

    Basis b;
    b.steps = steps;
    for (std::size_t m : modes) {
        std::size_t mc = SpectralTransform::conjugate_index(g, m);
        if (mc < m) continue;  // recorded when visiting the partner
        PairEntry e;
        e.lo = m;
        e.hi = mc;
        e.self = (m == mc);
        b.pairs.push_back(e);
        b.per_step += e.self ? 1 : 2;
    }
    return b;
}

void fill_slice(const Basis& basis, const double* p, Spectrum& slice) {
    std::fill(slice.c.begin(), slice.c.end(), std::complex<double>{});
    for (const PairEntry& e : basis.pairs) {
        if (e.self) {
            slice.c[e.lo] = *p++;
        } else {
            double a = *p++, b = *p++;
            slice.c[e.lo] = {a, b};
            slice.c[e.hi] = {a, -b};
        }
    }
}

std::vector<Spectrum> fill_slices(const Basis& basis, const Grid& g,
                                  const std::vector<double>& params) {
    std::vector<Spectrum> slices(basis.steps, Spectrum(g));
    for (int j = 0; j < basis.steps; ++j)
        fill_slice(basis, params.data() + static_cast<std::size_t>(j) * basis.per_step,
                   slices[j]);
    return slices;
}

std::vector<double> norm_weights(const Basis& basis, const SpectralDensity& dens,
                                 double dt) {
    const Grid& g = dens.grid();
    double inv_vol = 1.0 / (g.L * g.L * g.L);
    std::vector<double> w;
    w.reserve(basis.size());
    for (int j = 0; j < basis.steps; ++j)
        for (const PairEntry& e : basis.pairs) {
            if (e.self) {
                w.push_back(dt * inv_vol * dens.at(e.lo));
            } else {
                double v = dt * inv_vol * (dens.at(e.lo) + dens.at(e.hi));
                w.push_back(v);
                w.push_back(v);
            }
        }
    return w;
}

// ---------------------------------------------------------------------------
// Shifted smooth maximum: rs * (LSE_alpha(y/rs) - log(n)/alpha) <= max(y),
// a smooth lower bound converging to the max as alpha grows.
// ---------------------------------------------------------------------------

struct SmoothMax {
    double value = 0.0;
    std::vector<double> weights;  // softmax, same length as inputs
};

SmoothMax smooth_max(const std::vector<double>& y, double alpha, double scale) {
    SmoothMax out;
    out.weights.resize(y.size());
    double top = -1e300;
    for (double v : y) top = std::max(top, v);
    double a = alpha / scale;
    double z = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        double e = std::exp(a * (y[i] - top));
        out.weights[i] = e;
        z += e;
    }
    for (double& w : out.weights) w /= z;
    out.value = top + (std::log(z) - std::log(static_cast<double>(y.size()))) / a;
    return out;
}

// ---------------------------------------------------------------------------
// Event functional of the truncated control, with gradient. Three regimes:
//  - LinearFinal: constant coefficients, final-time functional. The map
//    params -> Psi is a fixed linear form, precomputed.
//  - LinearSup: constant coefficients, running sup. Per-pair spectral
//    stepping (conjugate halves eliminated), smoothed max over region values.
//  - General: pointwise coefficients; full-grid stepping with stored
//    intermediates and exact reverse-mode transposition.
// ---------------------------------------------------------------------------

class EventObjective {
public:
    EventObjective(const SolverConfig& cfg, const EventSpec& ev, const Basis& basis)
        : cfg_(cfg), ev_(ev), basis_(basis), stepper_(cfg) {
        const Grid& g = cfg_.grid;
        linear_ = stepper_.forcing_is_linear();
        dt_ = cfg_.dt();
        sup_scale_ = std::max(ev_.threshold, 1e-6);

        if (ev_.kind != EventSpec::Kind::SupExceed) {
            // Spectral weight of the final-time functional: Psi =
            // (1/L^3) sum_k diff_hat_k conj(g_hat_k), with g_hat the unit
            // phase for the point functional.
            ghat_ = Spectrum(g);
            if (ev_.kind == EventSpec::Kind::PointExceed) {
                for (int iz = 0; iz < g.n; ++iz)
                    for (int iy = 0; iy < g.n; ++iy)
                        for (int ix = 0; ix < g.n; ++ix) {
                            double phase = g.freq(ix) * (ev_.site[0] * g.dx()) +
                                           g.freq(iy) * (ev_.site[1] * g.dx()) +
                                           g.freq(iz) * (ev_.site[2] * g.dx());
                            ghat_.c[g.index(ix, iy, iz)] =
                                std::complex<double>(std::cos(phase), -std::sin(phase));
                        }
            } else {
                ghat_ = stepper_.transform().to_spectrum(ev_.test_field);
            }
        } else {
            // Region phase tables for the reduced per-pair evolution.
            phases_.resize(basis_.pairs.size());
            for (std::size_t p = 0; p < basis_.pairs.size(); ++p) {
                const PairEntry& e = basis_.pairs[p];
                auto [ix, iy, iz] = decompose(g, e.lo);
                phases_[p].resize(ev_.region.size());
                for (std::size_t q = 0; q < ev_.region.size(); ++q) {
                    auto [jx, jy, jz] = decompose(g, ev_.region[q]);
                    double phase = g.freq(ix) * (jx * g.dx()) + g.freq(iy) * (jy * g.dx()) +
                                   g.freq(iz) * (jz * g.dx());
                    phases_[p][q] = {std::cos(phase), std::sin(phase)};
                }
            }
        }

        // Per-pair step rotation and forcing weights (reduced paths).
        rot_.resize(basis_.pairs.size());
        for (std::size_t p = 0; p < basis_.pairs.size(); ++p) {
            double w = stepper_.omega()[basis_.pairs[p].lo];
            ModePropagator mp = propagator(dt_, w);
            rot_[p] = mp;
        }

        if (linear_ && ev_.kind != EventSpec::Kind::SupExceed) build_linear_form();
        if (!linear_) {
            // Free evolution snapshots: u_j = w_j + diff_j needs w_j.
            w_traj_ = solve_free();
            ensure_full_rot();
        }
    }

    void set_sharpness(double alpha) { alpha_ = alpha; }

    // Smoothed functional (equals the exact one except for sup events) and,
    // if grad is non-null, its gradient with respect to the parameters.
    double value(const std::vector<double>& params, std::vector<double>* grad) {
        switch (regime()) {
            case Regime::LinearFinal: {
                if (grad) *grad = psi_lin_;
                double v = psi0_;
                for (std::size_t i = 0; i < params.size(); ++i)
                    v += psi_lin_[i] * params[i];
                return v;
            }
            case Regime::LinearSup:
                return linear_sup(params, grad, /*smooth=*/true);
            case Regime::General:
                return general(params, grad, /*smooth=*/true);
        }
        return 0.0;  // unreachable
    }

    // Exact (unsmoothed) functional, no gradient.
    double exact(const std::vector<double>& params) {
        switch (regime()) {
            case Regime::LinearFinal:
                return value(params, nullptr);
            case Regime::LinearSup:
                return linear_sup(params, nullptr, /*smooth=*/false);
            case Regime::General:
                return general(params, nullptr, /*smooth=*/false);
        }
        return 0.0;  // unreachable
    }

    bool linear_forward() const { return linear_; }
    const SpectralDensity& density() const { return stepper_.density(); }

private:
    enum class Regime { LinearFinal, LinearSup, General };
    Regime regime() const {
        if (ev_.kind == EventSpec::Kind::SupExceed)
            return linear_ ? Regime::LinearSup : Regime::General;
        return linear_ ? Regime::LinearFinal : Regime::General;
    }

    static std::array<int, 3> decompose(const Grid& g, std::size_t m) {
        int ix = static_cast<int>(m % g.n);
        int iy = static_cast<int>((m / g.n) % g.n);
        int iz = static_cast<int>(m / (static_cast<std::size_t>(g.n) * g.n));
        return {ix, iy, iz};
    }

    Trajectory solve_free() {
        SolverConfig cfg = cfg_;
        cfg.epsilon = 0.0;
        return solve(cfg, nullptr, 0);
    }

    // Psi = psi0 + psi_lin . params for the final-time linear regime:
    // diff_hat(T) at mode k is sigma dt sum_j m(T-t_j, w_k) S_k h_hat_jk, and
    // constant drift adds a zero-mode offset.
    void build_linear_form() {
        const Grid& g = cfg_.grid;
        const double sig = cfg_.coeffs.sigma.c0;
        const double b0 = cfg_.coeffs.drift.c0;
        const double inv_vol = 1.0 / (g.L * g.L * g.L);
        psi_lin_.assign(basis_.size(), 0.0);
        psi0_ = 0.0;
        std::size_t p = 0;
        for (int j = 0; j < basis_.steps; ++j) {
            double lag = cfg_.horizon - j * dt_;
            for (const PairEntry& e : basis_.pairs) {
                double mlo = kernel_multiplier(lag, stepper_.omega()[e.lo]);
                std::complex<double> clo = inv_vol * sig * dt_ * mlo *
                                           density().at(e.lo) * std::conj(ghat_.c[e.lo]);
                if (e.self) {
                    psi_lin_[p++] = clo.real();
                } else {
                    std::complex<double> chi = inv_vol * sig * dt_ * mlo *
                                               density().at(e.hi) *
                                               std::conj(ghat_.c[e.hi]);
                    psi_lin_[p++] = (clo + chi).real();
                    psi_lin_[p++] = (chi - clo).imag();
                }
            }
            if (b0 != 0.0)
                psi0_ += dt_ * b0 * kernel_multiplier(lag, 0.0) * ghat_.c[0].real();
        }
    }

    // Reduced stepping over pair representatives; region samples via the
    // precomputed phases; smoothed or exact running maximum of |diff|.
    double linear_sup(const std::vector<double>& params, std::vector<double>* grad,
                      bool smooth) {
        const Grid& g = cfg_.grid;
        const double sig = cfg_.coeffs.sigma.c0;
        const double b0 = cfg_.coeffs.drift.c0;
        const double inv_vol = 1.0 / (g.L * g.L * g.L);
        const std::size_t np = basis_.pairs.size();
        const std::size_t nr = ev_.region.size();
        const int J = basis_.steps;

        std::vector<std::complex<double>> pos(np), vel(np);
        // Region samples y(j, q) for j = 1..J.
        std::vector<double> samples(static_cast<std::size_t>(J) * nr, 0.0);

        for (int j = 0; j < J; ++j) {
            const double* p = params.data() + static_cast<std::size_t>(j) * basis_.per_step;
            for (std::size_t q = 0; q < np; ++q) {
                const PairEntry& e = basis_.pairs[q];
                std::complex<double> h;
                if (e.self) {
                    h = *p++;
                } else {
                    double a = *p++, b = *p++;
                    h = {a, b};
                }
                std::complex<double> F = sig * dt_ * density().at(e.lo) * h;
                if (e.self && e.lo == 0 && b0 != 0.0) F += dt_ * b0 * g.L * g.L * g.L;
                std::complex<double> po = pos[q], ve = vel[q];
                pos[q] = rot_[q].pp * po + rot_[q].pv * ve + rot_[q].pv * F;
                vel[q] = rot_[q].vp * po + rot_[q].pp * ve + rot_[q].pp * F;
            }
            for (std::size_t r = 0; r < nr; ++r) {
                double v = 0.0;
                for (std::size_t q = 0; q < np; ++q) {
                    const PairEntry& e = basis_.pairs[q];
                    double re = (pos[q] * phases_[q][r]).real();
                    v += e.self ? re : 2.0 * re;
                }
                samples[static_cast<std::size_t>(j) * nr + r] = inv_vol * v;
            }
        }

        if (!smooth) {
            double top = 0.0;
            for (double v : samples) top = std::max(top, std::abs(v));
            return top;
        }

        // Smooth max over signed samples (covers the absolute value).
        std::vector<double> y;
        y.reserve(2 * samples.size());
        for (double v : samples) {
            y.push_back(v);
            y.push_back(-v);
        }
        SmoothMax sm = smooth_max(y, alpha_, sup_scale_);
        if (!grad) return sm.value;

        grad->assign(basis_.size(), 0.0);
        // Backward sweep: region cotangents feed the pair states, the step
        // transpose peels them back onto each slice's forcing.
        std::vector<std::complex<double>> cpos(np, std::complex<double>{});
        std::vector<std::complex<double>> cvel(np, std::complex<double>{});
        for (int j = J - 1; j >= 0; --j) {
            for (std::size_t r = 0; r < nr; ++r) {
                double wgt = sm.weights[2 * (static_cast<std::size_t>(j) * nr + r)] -
                             sm.weights[2 * (static_cast<std::size_t>(j) * nr + r) + 1];
                if (wgt == 0.0) continue;
                for (std::size_t q = 0; q < np; ++q) {
                    const PairEntry& e = basis_.pairs[q];
                    double fac = (e.self ? 1.0 : 2.0) * inv_vol * wgt;
                    cpos[q] += fac * std::conj(phases_[q][r]);
                }
            }
            double* gp = grad->data() + static_cast<std::size_t>(j) * basis_.per_step;
            for (std::size_t q = 0; q < np; ++q) {
                const PairEntry& e = basis_.pairs[q];
                std::complex<double> cp = cpos[q], cv = cvel[q];
                std::complex<double> cF = rot_[q].pv * cp + rot_[q].pp * cv;
                cpos[q] = rot_[q].pp * cp + rot_[q].vp * cv;
                cvel[q] = cF;
                std::complex<double> ch = sig * dt_ * density().at(e.lo) * cF;
                if (e.self) {
                    *gp++ += ch.real();
                } else {
                    *gp++ += ch.real();
                    *gp++ += ch.imag();
                }
            }
        }
        return sm.value;
    }

    // Full-grid forward with stored intermediates and exact reverse-mode
    // gradient, for pointwise (nonconstant) coefficients.
    double general(const std::vector<double>& params, std::vector<double>* grad,
                   bool smooth) {
        const Grid& g = cfg_.grid;
        const auto& sig = cfg_.coeffs.sigma;
        const auto& dri = cfg_.coeffs.drift;
        const double dx3 = g.dx() * g.dx() * g.dx();
        const int J = basis_.steps;
        SpectralTransform& tr = stepper_.transform();
        const SpectralDensity& dens = density();

        std::vector<Spectrum> slices = fill_slices(basis_, g, params);
        Spectrum pos(g), vel(g);
        std::vector<Field> diffs;  // diff_j, j = 0..J
        diffs.reserve(J + 1);
        diffs.emplace_back(g);
        std::vector<Field> gsmooth;  // Gamma * h at each step
        gsmooth.reserve(J);

        for (int j = 0; j < J; ++j) {
            Spectrum sm_h(g);
            for (std::size_t m = 0; m < sm_h.c.size(); ++m)
                sm_h.c[m] = dens.at(m) * slices[j].c[m];
            gsmooth.push_back(tr.to_field(sm_h));
            Field phi(g);
            const Field& w = w_traj_.position[j];
            const Field& d = diffs[j];
            for (std::size_t i = 0; i < phi.v.size(); ++i) {
                double u = w.v[i] + d.v[i];
                phi.v[i] = dt_ * (sig(u) * gsmooth[j].v[i] + dri(u));
            }
            Spectrum fh = tr.to_spectrum(phi);
            for (std::size_t m = 0; m < pos.c.size(); ++m) {
                std::complex<double> po = pos.c[m], ve = vel.c[m];
                pos.c[m] = rot_full_pp(m) * po + rot_full_pv(m) * ve + rot_full_pv(m) * fh.c[m];
                vel.c[m] = rot_full_vp(m) * po + rot_full_pp(m) * ve + rot_full_pp(m) * fh.c[m];
            }
            diffs.push_back(tr.to_field(pos));
        }

        // Functional value.
        double value = 0.0;
        SmoothMax sm;
        std::vector<double> y;
        if (ev_.kind == EventSpec::Kind::SupExceed) {
            y.reserve(2 * static_cast<std::size_t>(J) * ev_.region.size());
            for (int j = 1; j <= J; ++j)
                for (std::size_t m : ev_.region) {
                    y.push_back(diffs[j].v[m]);
                    y.push_back(-diffs[j].v[m]);
                }
            if (smooth) {
                sm = smooth_max(y, alpha_, sup_scale_);
                value = sm.value;
            } else {
                for (double v : y) value = std::max(value, v);
            }
        } else if (ev_.kind == EventSpec::Kind::PointExceed) {
            value = diffs[J](ev_.site[0], ev_.site[1], ev_.site[2]);
        } else {
            value = lattice_inner(diffs[J], ev_.test_field);
        }
        if (!grad) return value;

        // Reverse sweep.
        grad->assign(basis_.size(), 0.0);
        Spectrum cpos(g), cvel(g);
        // Seed the final-level cotangent on the physical diff.
        Field ubar(g);
        auto seed_event_cotangent = [&](int level, Field& out) {
            std::fill(out.v.begin(), out.v.end(), 0.0);
            if (ev_.kind == EventSpec::Kind::SupExceed) {
                if (level == 0) return;
                std::size_t base =
                    2 * static_cast<std::size_t>(level - 1) * ev_.region.size();
                std::size_t q = 0;
                for (std::size_t m : ev_.region) {
                    out.v[m] += sm.weights[base + 2 * q] - sm.weights[base + 2 * q + 1];
                    ++q;
                }
            } else if (level == J) {
                if (ev_.kind == EventSpec::Kind::PointExceed) {
                    out(ev_.site[0], ev_.site[1], ev_.site[2]) = 1.0;
                } else {
                    for (std::size_t i = 0; i < out.v.size(); ++i)
                        out.v[i] = dx3 * ev_.test_field.v[i];
                }
            }
        };

        const double spec_to_field = dx3 * g.L * g.L * g.L;  // transpose scale of to_spectrum
        const double field_to_spec = 1.0 / spec_to_field;    // transpose scale of to_field

        for (int j = J - 1; j >= 0; --j) {
            // Cotangent of diff_{j+1} from the event, mapped into the
            // spectral position state.
            seed_event_cotangent(j + 1, ubar);
            bool any = false;
            for (double v : ubar.v)
                if (v != 0.0) {
                    any = true;
                    break;
                }
            if (any) {
                Spectrum add = tr.to_spectrum(ubar);
                for (std::size_t m = 0; m < cpos.c.size(); ++m)
                    cpos.c[m] += field_to_spec * add.c[m];
            }
            // Transpose of the rotation/injection.
            Spectrum cF(g);
            for (std::size_t m = 0; m < cpos.c.size(); ++m) {
                std::complex<double> cp = cpos.c[m], cv = cvel.c[m];
                cF.c[m] = rot_full_pv(m) * cp + rot_full_pp(m) * cv;
                cpos.c[m] = rot_full_pp(m) * cp + rot_full_vp(m) * cv;
                cvel.c[m] = cF.c[m];
            }
            // Transpose of to_spectrum(phi).
            Field phibar(g);
            {
                Field t = tr.to_field(cF);
                for (std::size_t i = 0; i < phibar.v.size(); ++i)
                    phibar.v[i] = spec_to_field * t.v[i];
            }
            // Pointwise chain rule.
            const Field& w = w_traj_.position[j];
            const Field& d = diffs[j];
            Field gbar(g);
            Field dbar(g);
            for (std::size_t i = 0; i < phibar.v.size(); ++i) {
                double u = w.v[i] + d.v[i];
                gbar.v[i] = dt_ * sig(u) * phibar.v[i];
                dbar.v[i] = dt_ * (sig.derivative(u) * gsmooth[j].v[i] + dri.derivative(u)) *
                            phibar.v[i];
            }
            // Control gradient through Gamma-smoothing.
            {
                Spectrum gh = tr.to_spectrum(gbar);
                double* gp =
                    grad->data() + static_cast<std::size_t>(j) * basis_.per_step;
                for (const PairEntry& e : basis_.pairs) {
                    std::complex<double> hlo =
                        dens.at(e.lo) * field_to_spec * gh.c[e.lo];
                    if (e.self) {
                        *gp++ += hlo.real();
                    } else {
                        std::complex<double> hhi =
                            dens.at(e.hi) * field_to_spec * gh.c[e.hi];
                        *gp++ += (hlo + hhi).real();
                        *gp++ += (hlo.imag() - hhi.imag());
                    }
                }
            }
            // diff_j cotangent (forcing dependence on the state) flows into
            // the spectral position cotangent.
            if (j > 0) {
                bool nz = false;
                for (double v : dbar.v)
                    if (v != 0.0) {
                        nz = true;
                        break;
                    }
                if (nz) {
                    Spectrum add = tr.to_spectrum(dbar);
                    for (std::size_t m = 0; m < cpos.c.size(); ++m)
                        cpos.c[m] += field_to_spec * add.c[m];
                }
            }
        }
        return value;
    }

    double rot_full_pp(std::size_t m) const { return rot_pp_full_[m]; }
    double rot_full_pv(std::size_t m) const { return rot_pv_full_[m]; }
    double rot_full_vp(std::size_t m) const { return rot_vp_full_[m]; }

    // Full-grid rotation tables, needed only by the general regime.
    void ensure_full_rot() {
        if (!rot_pp_full_.empty()) return;
        const Grid& g = cfg_.grid;
        rot_pp_full_.resize(g.size());
        rot_pv_full_.resize(g.size());
        rot_vp_full_.resize(g.size());
        for (std::size_t m = 0; m < g.size(); ++m) {
            ModePropagator p = propagator(dt_, stepper_.omega()[m]);
            rot_pp_full_[m] = p.pp;
            rot_pv_full_[m] = p.pv;
            rot_vp_full_[m] = p.vp;
        }
    }

private:
    SolverConfig cfg_;
    EventSpec ev_;
    Basis basis_;
    WaveStepper stepper_;
    bool linear_ = false;
    double dt_ = 0.0;
    double alpha_ = 32.0;
    double sup_scale_ = 1.0;

    Spectrum ghat_;
    std::vector<double> psi_lin_;
    double psi0_ = 0.0;
    std::vector<std::vector<std::complex<double>>> phases_;
    std::vector<ModePropagator> rot_;
    Trajectory w_traj_;
    std::vector<double> rot_pp_full_, rot_pv_full_, rot_vp_full_;
};

// ---------------------------------------------------------------------------
// Limited-memory BFGS with Armijo backtracking. Minimizes fg in place,
// returns the final objective value.
// ---------------------------------------------------------------------------

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

template <class F>
double lbfgs_minimize(F&& fg, std::vector<double>& x, int max_iter) {
    const std::size_t n = x.size();
    if (n == 0) {
        std::vector<double> g;
        return fg(x, g);
    }
    const int hist = 8;
    std::vector<double> g(n), xn(n), gn(n), dir(n);
    double f = fg(x, g);
    std::deque<std::vector<double>> S, Y;
    std::deque<double> rho;

    for (int it = 0; it < max_iter; ++it) {
        double gmax = 0.0;
        for (double v : g) gmax = std::max(gmax, std::abs(v));
        if (gmax <= 1e-9 * (1.0 + std::abs(f))) break;

        // Two-loop recursion with gamma-scaled identity seed.
        dir = g;
        std::vector<double> al(S.size());
        for (std::size_t i = S.size(); i-- > 0;) {
            al[i] = rho[i] * dot(S[i], dir);
            for (std::size_t k = 0; k < n; ++k) dir[k] -= al[i] * Y[i][k];
        }
        if (!S.empty()) {
            double gamma = dot(S.back(), Y.back()) / dot(Y.back(), Y.back());
            for (double& v : dir) v *= gamma;
        }
        for (std::size_t i = 0; i < S.size(); ++i) {
            double be = rho[i] * dot(Y[i], dir);
            for (std::size_t k = 0; k < n; ++k) dir[k] += (al[i] - be) * S[i][k];
        }
        for (double& v : dir) v = -v;

        double gd = dot(g, dir);
        if (!(gd < 0.0)) {  // not a descent direction: fall back to steepest
            for (std::size_t k = 0; k < n; ++k) dir[k] = -g[k];
            gd = -dot(g, g);
            if (gd == 0.0) break;
        }
        double t = S.empty() ? 1.0 / std::max(1.0, gmax) : 1.0;
        bool accepted = false;
        double fn = f;
        for (int ls = 0; ls < 40; ++ls) {
            for (std::size_t k = 0; k < n; ++k) xn[k] = x[k] + t * dir[k];
            fn = fg(xn, gn);
            if (std::isfinite(fn) && fn <= f + 1e-4 * t * gd) {
                accepted = true;
                break;
            }
            t *= 0.6;
        }
        if (!accepted) break;

        double ys = 0.0, ss = 0.0, yy = 0.0;
        std::vector<double> s(n), y(n);
        for (std::size_t k = 0; k < n; ++k) {
            s[k] = xn[k] - x[k];
            y[k] = gn[k] - g[k];
            ys += s[k] * y[k];
            ss += s[k] * s[k];
            yy += y[k] * y[k];
        }
        if (ys > 1e-12 * std::sqrt(ss * yy)) {  // skip updates with bad curvature
            S.push_back(std::move(s));
            Y.push_back(std::move(y));
            rho.push_back(1.0 / ys);
            if (static_cast<int>(S.size()) > hist) {
                S.pop_front();
                Y.pop_front();
                rho.pop_front();
            }
        }
        x.swap(xn);
        g.swap(gn);
        f = fn;
    }
    return f;
}

// ---------------------------------------------------------------------------
// One multi-start candidate: augmented-Lagrangian outer loop, L-BFGS inner
// solves, then a feasibility polish along the found direction.
// ---------------------------------------------------------------------------

struct Candidate {
    std::vector<double> params;
    double rate = std::numeric_limits<double>::infinity();
    double psi = 0.0;
    double residual = std::numeric_limits<double>::infinity();
    bool feasible = false;
    std::vector<double> trace;
};

enum class PolishRule {
    Affine,  // final-time functional, constant coefficients: closed form
    Scale,   // running sup, constant sigma, zero drift: exact homogeneity
    Bisect,  // anything else: bracket the feasibility boundary
};

Candidate run_start(EventObjective& obj, const std::vector<double>& wq, double r,
                    const RateOptions& opts, PolishRule polish,
                    std::vector<double> x) {
    Candidate cand;
    const std::size_t n = x.size();
    double mu = 0.0;
    double lam = opts.penalty_init;
    double alpha = opts.sharpness_init;
    std::vector<double> pg;

    for (int outer = 0; outer < opts.outer_iterations; ++outer) {
        obj.set_sharpness(alpha);
        auto fg = [&](const std::vector<double>& p, std::vector<double>& grad) {
            grad.assign(n, 0.0);
            double f = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                f += 0.5 * wq[i] * p[i] * p[i];
                grad[i] = wq[i] * p[i];
            }
            double psi = obj.value(p, &pg);
            double t = mu / lam + (r - psi);
            if (t > 0.0) {
                f += 0.5 * lam * t * t - 0.5 * mu * mu / lam;
                for (std::size_t i = 0; i < n; ++i) grad[i] -= lam * t * pg[i];
            } else {
                f -= 0.5 * mu * mu / lam;
            }
            return f;
        };
        double f = lbfgs_minimize(fg, x, opts.inner_iterations);
        cand.trace.push_back(f);
        double psi_s = obj.value(x, nullptr);
        mu = std::max(0.0, mu + lam * (r - psi_s));
        lam *= opts.penalty_growth;
        alpha = std::min(alpha * opts.sharpness_growth, 1e7);
    }

    // Polish: move along the found direction to the exact (unsmoothed)
    // feasibility boundary, slightly overshooting so roundoff in the replay
    // cannot flip the verdict.
    const double over = 1.0 + 1e-12;
    double psix = obj.exact(x);
    switch (polish) {
        case PolishRule::Affine: {
            std::vector<double> zero(n, 0.0);
            double psi0 = obj.exact(zero);
            if (r - psi0 <= 0.0) {
                x.assign(n, 0.0);
            } else {
                double denom = psix - psi0;
                if (denom > 1e-300) {
                    double s = (r - psi0) / denom * over;
                    for (double& v : x) v *= s;
                }
            }
            break;
        }
        case PolishRule::Scale: {
            if (r <= 0.0) {
                x.assign(n, 0.0);
            } else if (psix > 1e-300) {
                double s = r / psix * over;
                for (double& v : x) v *= s;
            }
            break;
        }
        case PolishRule::Bisect: {
            auto at_scale = [&](double s) {
                std::vector<double> xs(n);
                for (std::size_t i = 0; i < n; ++i) xs[i] = s * x[i];
                return obj.exact(xs);
            };
            if (r <= 0.0) {
                x.assign(n, 0.0);
            } else {
                double hi = 1.0;
                double val_hi = psix;
                int expand = 0;
                while (val_hi < r && expand < 16) {
                    hi *= 2.0;
                    val_hi = at_scale(hi);
                    ++expand;
                }
                if (val_hi >= r) {
                    double lo = (hi == 1.0) ? 0.0 : hi / 2.0;
                    for (int it = 0; it < 60; ++it) {
                        double mid = 0.5 * (lo + hi);
                        if (at_scale(mid) >= r)
                            hi = mid;
                        else
                            lo = mid;
                    }
                    for (double& v : x) v *= hi;  // keep the feasible endpoint
                }
            }
            break;
        }
    }

    if (opts.norm_bound) {
        double nsq = 0.0;
        for (std::size_t i = 0; i < n; ++i) nsq += wq[i] * x[i] * x[i];
        double nrm = std::sqrt(nsq);
        if (nrm > *opts.norm_bound) {
            double s = *opts.norm_bound / nrm * (1.0 - 1e-12);
            for (double& v : x) v *= s;
        }
    }

    cand.psi = obj.exact(x);
    double nsq = 0.0;
    for (std::size_t i = 0; i < n; ++i) nsq += wq[i] * x[i] * x[i];
    cand.rate = 0.5 * nsq;
    cand.residual = std::max(0.0, r - cand.psi);
    double tol = r > 0.0 ? opts.feasibility_rel * r : 1e-12;
    cand.feasible = cand.residual <= tol;
    cand.params = std::move(x);
    return cand;
}

}  // namespace

RateReport minimize_rate(const EventSpec& event, const SolverConfig& config,
                         const RateOptions& opts) {
    event.validate(config.grid);
    if (opts.outer_iterations < 1 || opts.inner_iterations < 1)
        throw std::invalid_argument("minimize_rate: iteration budgets must be >= 1");
    if (opts.restarts < 1)
        throw std::invalid_argument("minimize_rate: need at least one start");
    if (opts.norm_bound && !(*opts.norm_bound > 0.0))
        throw std::invalid_argument("minimize_rate: norm bound must be positive");

    const Grid& grid = config.grid;
    const double r = event.threshold;
    const double dt = config.dt();
    const bool linear =
        config.coeffs.sigma.is_constant() && config.coeffs.drift.is_constant();

    PolishRule polish;
    if (linear && event.kind != EventSpec::Kind::SupExceed)
        polish = PolishRule::Affine;
    else if (linear && config.coeffs.drift.is_zero())
        polish = PolishRule::Scale;
    else
        polish = PolishRule::Bisect;

    Basis basis = make_basis(grid, opts.truncation, config.steps);
    SpectralDensity density(config.cov, grid);
    std::vector<double> wq = norm_weights(basis, density, dt);

    // Starts are independent pure tasks reduced into indexed slots; start 0
    // is the zero control, the rest are seeded random directions scaled to
    // put the functional near half the threshold. Sup events get a seeded
    // start 0 as well: their smoothed objective is stationary at the zero
    // control by sign symmetry, so that start could never leave the origin.
    const int starts = opts.restarts;
    std::vector<Candidate> cands(starts);
    unsigned hw = std::thread::hardware_concurrency();
    int workers = static_cast<int>(std::min<unsigned>(starts, hw ? hw : 1));
    par::for_each_index(starts, workers, [&](std::size_t s) {
        EventObjective obj(config, event, basis);
        std::vector<double> x(basis.size(), 0.0);
        if (s > 0 || event.kind == EventSpec::Kind::SupExceed) {
            std::uint64_t key = rng::derive(opts.seed, s);
            for (std::size_t i = 0; i < x.size(); ++i)
                x[i] = rng::normal_pair(key, 0, rng::LANE_RESTART, i).z0;
            double psi0 = obj.exact(x);
            if (r > 0.0 && std::abs(psi0) > 1e-300) {
                double sc = 0.5 * r / psi0;
                for (double& v : x) v *= sc;
            } else {
                double nsq = 0.0;
                for (std::size_t i = 0; i < x.size(); ++i) nsq += wq[i] * x[i] * x[i];
                if (nsq > 0.0)
                    for (double& v : x) v /= std::sqrt(nsq);
            }
        }
        cands[s] = run_start(obj, wq, r, opts, polish, std::move(x));
    });

    // Feasible candidate of least rate; ties resolve to the lowest start
    // index. If nothing is feasible, keep the smallest residual.
    int best = 0;
    for (int s = 1; s < starts; ++s) {
        const Candidate &a = cands[s], &b = cands[best];
        bool better;
        if (a.feasible != b.feasible)
            better = a.feasible;
        else if (a.feasible)
            better = a.rate < b.rate;
        else
            better = a.residual < b.residual;
        if (better) best = s;
    }
    Candidate& win = cands[best];

    Control ctrl(fill_slices(basis, grid, win.params), dt, density, opts.norm_bound);

    // Replay through the public skeleton path; the reported residual comes
    // from this replay, not from the optimizer's own evaluator.
    Trajectory with = skeleton_solve(config, ctrl);
    SolverConfig cfg0 = config;
    cfg0.epsilon = 0.0;
    Trajectory without = solve(cfg0, nullptr, 0);
    EventTracker tracker(event, grid, config.steps);
    Field diff(grid);
    for (int j = 0; j <= config.steps; ++j) {
        for (std::size_t i = 0; i < diff.v.size(); ++i)
            diff.v[i] = with.position[j].v[i] - without.position[j].v[i];
        tracker.offer(j, diff);
    }
    double attained = tracker.value();
    double residual = std::max(0.0, r - attained);
    double tol = r > 0.0 ? opts.feasibility_rel * r : 1e-12;
    bool feasible = residual <= tol;

    RateReport report{event,      std::move(ctrl), 0.0, 0.0, {}, {},
                      RateReport::Status::Infeasible, 0};
    report.rate = rate_functional(report.optimal);
    report.residual = residual;
    report.trace = std::move(win.trace);
    for (const Candidate& cand : cands) report.start_rates.push_back(cand.rate);
    report.status = feasible
                        ? (linear ? RateReport::Status::Certified
                                  : RateReport::Status::Local)
                        : RateReport::Status::Infeasible;
    report.truncation = opts.truncation;
    return report;
}

}  // namespace swe
