#include "swe/solver.hpp"

#include "swe/rng.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace swe {

CoefficientSpec::Fn CoefficientSpec::Fn::constant(double c) {
    Fn f;
    f.family = Family::Constant;
    f.c0 = c;
    f.lipschitz = 0.0;
    return f;
}

CoefficientSpec::Fn CoefficientSpec::Fn::affine(double intercept, double slope) {
    Fn f;
    f.family = Family::Affine;
    f.c0 = intercept;
    f.c1 = slope;
    f.lipschitz = std::abs(slope);
    return f;
}

CoefficientSpec::Fn CoefficientSpec::Fn::bounded_smooth(double scale) {
    Fn f;
    f.family = Family::BoundedSmooth;
    f.c0 = scale;
    f.lipschitz = std::abs(scale);  // sup |d/du tanh| = 1
    return f;
}

double CoefficientSpec::Fn::operator()(double u) const {
    switch (family) {
        case Family::Constant:
            return c0;
        case Family::Affine:
            return c0 + c1 * u;
        case Family::BoundedSmooth:
            return c0 * std::tanh(u);
    }
    return 0.0;  // unreachable
}

double CoefficientSpec::Fn::derivative(double u) const {
    switch (family) {
        case Family::Constant:
            return 0.0;
        case Family::Affine:
            return c1;
        case Family::BoundedSmooth: {
            double th = std::tanh(u);
            return c0 * (1.0 - th * th);
        }
    }
    return 0.0;  // unreachable
}

SolverConfig::SolverConfig(Grid grid_, double horizon_, int steps_, InitialData init_,
                           CovarianceSpec cov_, CoefficientSpec coeffs_, double epsilon_)
    : grid(grid_),
      horizon(horizon_),
      steps(steps_),
      init(std::move(init_)),
      cov(cov_),
      coeffs(coeffs_),
      epsilon(epsilon_) {
    if (!(init.position.grid == grid))
        throw std::invalid_argument("SolverConfig: initial data lives on a different grid");
    if (!(horizon > 0.0))
        throw std::invalid_argument("SolverConfig: horizon must be positive");
    if (!(horizon < grid.L / 4.0))
        throw std::invalid_argument(
            "SolverConfig: horizon must stay below L/4 so wraparound cannot "
            "reach the observation region");
    if (steps < 1) throw std::invalid_argument("SolverConfig: need at least one step");
    if (!(epsilon >= 0.0 && epsilon <= 1.0))
        throw std::invalid_argument("SolverConfig: epsilon must lie in [0, 1]");
}

Control::Control(const Grid& grid, int steps, double dt) : grid_(grid), dt_(dt) {
    if (steps < 1) throw std::invalid_argument("Control: need at least one step");
    if (!(dt > 0.0)) throw std::invalid_argument("Control: dt must be positive");
    slices_.assign(steps, Spectrum(grid));
    slice_zero_.assign(steps, true);
}

Control::Control(std::vector<Spectrum> slices, double dt, const SpectralDensity& density,
                 std::optional<double> bound)
    : dt_(dt), slices_(std::move(slices)), bound_(bound) {
    if (slices_.empty()) throw std::invalid_argument("Control: need at least one slice");
    if (!(dt > 0.0)) throw std::invalid_argument("Control: dt must be positive");
    grid_ = slices_.front().grid;
    if (!(grid_ == density.grid()))
        throw std::invalid_argument("Control: slices and density disagree on the grid");
    slice_zero_.resize(slices_.size());
    for (std::size_t j = 0; j < slices_.size(); ++j) {
        const Spectrum& s = slices_[j];
        if (!(s.grid == grid_))
            throw std::invalid_argument("Control: slices live on different grids");
        double max_abs = 0.0;
        bool zero = true;
        for (const auto& c : s.c) {
            double a = std::abs(c);
            if (a != 0.0) zero = false;
            if (a > max_abs) max_abs = a;
        }
        slice_zero_[j] = zero;
        all_zero_ = all_zero_ && zero;
        if (!zero) {
            double residue = SpectralTransform::hermitian_residue(s);
            if (residue > 1e-10 * (1.0 + max_abs))
                throw std::invalid_argument(
                    "Control: slice " + std::to_string(j) +
                    " is not Hermitian-symmetric (physical field would be complex)");
        }
        norm_sq_ += dt_ * rkhs_norm_sq(density, s);
    }
    if (bound_) {
        if (!(*bound_ >= 0.0)) throw std::invalid_argument("Control: bound must be >= 0");
        if (std::sqrt(norm_sq_) > *bound_ + 1e-9)
            throw std::invalid_argument("Control: path norm exceeds the declared ball radius");
    }
}

double Control::recompute_norm_sq(const SpectralDensity& density) const {
    double acc = 0.0;
    for (const Spectrum& s : slices_) acc += dt_ * rkhs_norm_sq(density, s);
    return acc;
}

WaveStepper::WaveStepper(SolverConfig config)
    : cfg_(std::move(config)),
      sampler_(cfg_.cov, cfg_.grid),
      tr_(cfg_.grid),
      forcing_(cfg_.grid) {
    const Grid& g = cfg_.grid;
    omega_.resize(g.size());
    rot_pp_.resize(g.size());
    rot_pv_.resize(g.size());
    rot_vp_.resize(g.size());
    const double dt = cfg_.dt();
    for (int iz = 0; iz < g.n; ++iz)
        for (int iy = 0; iy < g.n; ++iy)
            for (int ix = 0; ix < g.n; ++ix) {
                std::size_t m = g.index(ix, iy, iz);
                double fx = g.freq(ix), fy = g.freq(iy), fz = g.freq(iz);
                double w = std::sqrt(fx * fx + fy * fy + fz * fz);
                omega_[m] = w;
                ModePropagator p = propagator(dt, w);
                rot_pp_[m] = p.pp;
                rot_pv_[m] = p.pv;
                rot_vp_[m] = p.vp;
            }
}

WaveStepper::State WaveStepper::initial_state() {
    State st;
    st.pos = tr_.to_spectrum(cfg_.init.position);
    st.vel = tr_.to_spectrum(cfg_.init.velocity);
    return st;
}

bool WaveStepper::forcing_is_linear() const {
    return cfg_.coeffs.sigma.is_constant() && cfg_.coeffs.drift.is_constant();
}

void WaveStepper::advance(State& st, int j, const StepInputs& in) {
    const Grid& g = cfg_.grid;
    const double dt = cfg_.dt();
    const auto& sig = cfg_.coeffs.sigma;
    const auto& dri = cfg_.coeffs.drift;
    const bool have_noise =
        (in.noise_hat || in.noise_field) && cfg_.epsilon > 0.0 && !sig.is_zero();
    const bool have_control = in.control_hat != nullptr && !sig.is_zero();
    const bool have_drift = !dri.is_zero();
    const bool any_forcing = have_noise || have_control || have_drift;
    const double sqrt_eps = std::sqrt(cfg_.epsilon);

    if (any_forcing) {
        if (forcing_is_linear()) {
            std::fill(forcing_.c.begin(), forcing_.c.end(), std::complex<double>{});
            if (have_noise) {
                const double a = sqrt_eps * sig.c0;
                if (in.noise_hat) {
                    for (std::size_t m = 0; m < forcing_.c.size(); ++m)
                        forcing_.c[m] += a * in.noise_hat->c[m];
                } else {
                    Spectrum nh = tr_.to_spectrum(*in.noise_field);
                    for (std::size_t m = 0; m < forcing_.c.size(); ++m)
                        forcing_.c[m] += a * nh.c[m];
                }
            }
            if (have_control) {
                const SpectralDensity& dens = sampler_.density();
                const double a = sig.c0 * dt;
                for (std::size_t m = 0; m < forcing_.c.size(); ++m)
                    forcing_.c[m] += a * dens.at(m) * in.control_hat->c[m];
            }
            if (have_drift) {
                // Constant drift is pure zero mode: transform of the constant
                // b over the box.
                forcing_.c[0] += dt * dri.c0 * g.L * g.L * g.L;
            }
        } else {
            if (!in.state_field)
                throw std::logic_error(
                    "WaveStepper::advance: pointwise coefficients need the "
                    "physical state at the step's left endpoint");
            const Field& u = *in.state_field;
            Field f(g);
            if (have_noise) {
                Field scratch;
                const Field* nf = in.noise_field;
                if (!nf) {
                    scratch = tr_.to_field(*in.noise_hat);
                    nf = &scratch;
                }
                for (std::size_t i = 0; i < f.v.size(); ++i)
                    f.v[i] += sqrt_eps * sig(u.v[i]) * nf->v[i];
            }
            if (have_control) {
                const SpectralDensity& dens = sampler_.density();
                Spectrum smoothed(g);
                for (std::size_t m = 0; m < smoothed.c.size(); ++m)
                    smoothed.c[m] = dens.at(m) * in.control_hat->c[m];
                Field gh = tr_.to_field(smoothed);
                for (std::size_t i = 0; i < f.v.size(); ++i)
                    f.v[i] += dt * sig(u.v[i]) * gh.v[i];
            }
            if (have_drift)
                for (std::size_t i = 0; i < f.v.size(); ++i) f.v[i] += dt * dri(u.v[i]);
            forcing_ = tr_.to_spectrum(f);
        }
    }

    bool finite = true;
    for (std::size_t m = 0; m < st.pos.c.size(); ++m) {
        std::complex<double> p = st.pos.c[m], v = st.vel.c[m];
        std::complex<double> F = any_forcing ? forcing_.c[m] : std::complex<double>{};
        st.pos.c[m] = rot_pp_[m] * p + rot_pv_[m] * v + rot_pv_[m] * F;
        st.vel.c[m] = rot_vp_[m] * p + rot_pp_[m] * v + rot_pp_[m] * F;
        finite = finite && std::isfinite(st.pos.c[m].real()) &&
                 std::isfinite(st.pos.c[m].imag()) && std::isfinite(st.vel.c[m].real()) &&
                 std::isfinite(st.vel.c[m].imag());
    }
    if (!finite)
        throw std::runtime_error("solver: state became non-finite at step " +
                                 std::to_string(j));
}

namespace {

void check_control(const SolverConfig& cfg, const Control* control) {
    if (!control) return;
    if (!(control->grid() == cfg.grid))
        throw std::invalid_argument("solve: control grid does not match the config");
    if (control->steps() != cfg.steps)
        throw std::invalid_argument("solve: control has a different number of steps");
    if (std::abs(control->dt() - cfg.dt()) > 1e-12 * cfg.dt())
        throw std::invalid_argument("solve: control time step does not match the config");
}

Trajectory run_solve(const SolverConfig& cfg, const Control* control,
                     const NoiseIncrements* noise, std::uint64_t seed,
                     bool store_velocity) {
    check_control(cfg, control);
    if (noise) {
        if (!(noise->grid == cfg.grid))
            throw std::invalid_argument("solve: noise grid does not match the config");
        if (noise->steps < cfg.steps)
            throw std::invalid_argument("solve: noise path has too few increments");
        if (std::abs(noise->dt - cfg.dt()) > 1e-12 * cfg.dt())
            throw std::invalid_argument("solve: noise time step does not match the config");
    }
    WaveStepper eng(cfg);
    WaveStepper::State st = eng.initial_state();
    const bool linear = eng.forcing_is_linear();
    const bool sample_noise =
        cfg.epsilon > 0.0 && !cfg.coeffs.sigma.is_zero() && noise == nullptr;
    const double sqrt_dt = std::sqrt(cfg.dt());

    Trajectory out;
    out.grid = cfg.grid;
    out.dt = cfg.dt();
    out.position.reserve(cfg.steps + 1);
    out.position.push_back(cfg.init.position);  // exact copy, by contract
    if (store_velocity) {
        out.velocity.reserve(cfg.steps + 1);
        out.velocity.push_back(cfg.init.velocity);
    }

    for (int j = 0; j < cfg.steps; ++j) {
        WaveStepper::StepInputs in;
        Spectrum noise_hat;
        if (cfg.epsilon > 0.0 && !cfg.coeffs.sigma.is_zero()) {
            if (sample_noise) {
                noise_hat = eng.sampler().draw_spectrum(
                    seed, rng::LANE_NOISE, static_cast<std::uint32_t>(j), sqrt_dt);
                in.noise_hat = &noise_hat;
            } else {
                in.noise_field = &noise->increments[j];
            }
        }
        if (control && !control->slice_is_zero(j)) in.control_hat = &control->slice(j);
        if (!linear) in.state_field = &out.position[j];
        eng.advance(st, j, in);
        out.position.push_back(eng.materialize(st.pos));
        if (store_velocity) out.velocity.push_back(eng.materialize(st.vel));
    }
    return out;
}

}  // namespace

Trajectory solve(const SolverConfig& config, const Control* control, std::uint64_t seed,
                 bool store_velocity) {
    return run_solve(config, control, nullptr, seed, store_velocity);
}

Trajectory solve(const SolverConfig& config, const Control* control,
                 const NoiseIncrements& noise, bool store_velocity) {
    return run_solve(config, control, &noise, 0, store_velocity);
}

PicardError::PicardError(const std::string& what, std::vector<double> gaps_)
    : std::runtime_error(what), gaps(std::move(gaps_)) {}

PicardResult picard_solve(const SolverConfig& config, const Control* control,
                          const NoiseIncrements& noise, double tol, int max_iterations) {
    check_control(config, control);
    if (!(noise.grid == config.grid) || noise.steps < config.steps)
        throw std::invalid_argument("picard_solve: noise path incompatible with config");
    if (tol < 0.0) throw std::invalid_argument("picard_solve: tol must be >= 0");
    if (max_iterations <= 0) max_iterations = config.steps + 2;

    WaveStepper eng(config);
    const bool linear = eng.forcing_is_linear();

    // Iterate 0: the free evolution, meaning no forcing at all. The
    // configured stepper would still inject a nonzero drift b(u), so the
    // initial iterate runs on a stepper with the coefficients zeroed out.
    Trajectory prev;
    prev.grid = config.grid;
    prev.dt = config.dt();
    prev.position.push_back(config.init.position);
    {
        SolverConfig free_cfg = config;
        free_cfg.coeffs = CoefficientSpec{};
        free_cfg.epsilon = 0.0;
        WaveStepper free_eng(free_cfg);
        WaveStepper::State st = free_eng.initial_state();
        for (int j = 0; j < config.steps; ++j) {
            free_eng.advance(st, j, WaveStepper::StepInputs{});
            prev.position.push_back(free_eng.materialize(st.pos));
        }
    }

    std::vector<double> gaps;
    for (int n = 1; n <= max_iterations; ++n) {
        Trajectory next;
        next.grid = config.grid;
        next.dt = config.dt();
        next.position.reserve(config.steps + 1);
        next.position.push_back(config.init.position);
        WaveStepper::State st = eng.initial_state();
        for (int j = 0; j < config.steps; ++j) {
            WaveStepper::StepInputs in;
            if (config.epsilon > 0.0 && !config.coeffs.sigma.is_zero())
                in.noise_field = &noise.increments[j];
            if (control && !control->slice_is_zero(j)) in.control_hat = &control->slice(j);
            if (!linear) in.state_field = &prev.position[j];
            eng.advance(st, j, in);
            next.position.push_back(eng.materialize(st.pos));
        }
        double gap = 0.0;
        for (int j = 0; j <= config.steps; ++j)
            for (std::size_t i = 0; i < next.position[j].v.size(); ++i)
                gap = std::max(gap,
                               std::abs(next.position[j].v[i] - prev.position[j].v[i]));
        gaps.push_back(gap);
        prev = std::move(next);
        if (gap <= tol) return PicardResult{std::move(prev), n, std::move(gaps)};
    }
    throw PicardError("picard_solve: gap still above tolerance after " +
                          std::to_string(max_iterations) + " iterations",
                      std::move(gaps));
}

}  // namespace swe
