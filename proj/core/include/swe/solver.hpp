// Time stepping for the damped-free wave field driven by correlated noise, a
// deterministic control, or both:
//
//   (d/dt^2 - Laplacian) u = sqrt(eps) sigma(u) dW + sigma(u) (Gamma * h) + b(u)
//
// discretized by the stochastic trigonometric scheme: exact per-mode rotation
// of (position, velocity) over each step, with the forcing evaluated at the
// step's left endpoint and injected through the same rotation. The linear
// part is exact in Fourier space, so there is no CFL restriction; all
// discretization error sits in the forcing quadrature.
#pragma once

#include "swe/covariance.hpp"
#include "swe/kernel.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace swe {

struct CoefficientSpec {
    enum class Family { Constant, Affine, BoundedSmooth };

    // One scalar coefficient function from a named Lipschitz family.
    struct Fn {
        Family family = Family::Constant;
        double c0 = 0.0;  // Constant level / affine intercept / tanh scale
        double c1 = 0.0;  // affine slope
        double lipschitz = 0.0;  // declared Lipschitz constant of the family

        static Fn constant(double c);
        static Fn affine(double intercept, double slope);
        static Fn bounded_smooth(double scale);  // scale * tanh(u)

        double operator()(double u) const;
        double derivative(double u) const;
        bool is_constant() const { return family == Family::Constant; }
        bool is_zero() const { return is_constant() && c0 == 0.0; }
    };

    Fn sigma = Fn::constant(1.0);  // noise/control amplitude coefficient
    Fn drift = Fn::constant(0.0);  // zero-order drift b
};

struct SolverConfig {
    Grid grid;
    double horizon = 0.0;  // T
    int steps = 0;         // J, so dt = T/J
    InitialData init;
    CovarianceSpec cov;
    CoefficientSpec coeffs;
    double epsilon = 1.0;      // noise amplitude, in [0,1]
    double picard_tol = 1e-9;  // default gap tolerance for picard_solve

    SolverConfig(Grid grid, double horizon, int steps, InitialData init,
                 CovarianceSpec cov, CoefficientSpec coeffs, double epsilon);

    double dt() const { return horizon / steps; }
};

struct Trajectory {
    Grid grid;
    double dt = 0.0;
    std::vector<Field> position;  // J+1 snapshots, entry j at time j*dt
    std::vector<Field> velocity;  // empty unless requested; else J+1 entries
};

// Deterministic control path h, stored as one spectral slice per time step
// (slice j is h(t_j, .), Hermitian-symmetric so the physical field is real).
// The squared path norm  sum_j dt (1/L^3) sum_k S_k |h_hat(t_j, xi_k)|^2  is
// computed against the covariance density at construction and cached; an
// optional bound N declares membership in the centered norm ball of radius N
// and is enforced at construction.
class Control {
public:
    // Zero control on the given time grid.
    Control(const Grid& grid, int steps, double dt);

    Control(std::vector<Spectrum> slices, double dt, const SpectralDensity& density,
            std::optional<double> bound = std::nullopt);

    const Grid& grid() const { return grid_; }
    int steps() const { return static_cast<int>(slices_.size()); }
    double dt() const { return dt_; }
    const Spectrum& slice(int j) const { return slices_.at(j); }
    bool slice_is_zero(int j) const { return slice_zero_.at(j); }
    bool is_zero() const { return all_zero_; }

    double norm_sq() const { return norm_sq_; }
    // Fresh two-pass evaluation of the cached norm (consistency checks).
    double recompute_norm_sq(const SpectralDensity& density) const;

    const std::optional<double>& bound() const { return bound_; }

private:
    Grid grid_;
    double dt_ = 0.0;
    std::vector<Spectrum> slices_;
    std::vector<bool> slice_zero_;
    bool all_zero_ = true;
    double norm_sq_ = 0.0;
    std::optional<double> bound_;
};

// The stepping core shared by the stochastic solver, the skeleton solver, the
// Picard construction, and the Monte Carlo / optimization drivers. Holds the
// covariance density, the per-mode frequencies and one-step rotation tables,
// and one transform (so one stepper per thread).
class WaveStepper {
public:
    explicit WaveStepper(SolverConfig config);

    const SolverConfig& config() const { return cfg_; }
    const SpectralDensity& density() const { return sampler_.density(); }
    const GaussianFieldSampler& sampler() const { return sampler_; }
    SpectralTransform& transform() { return tr_; }
    // |xi_k| per linear mode index.
    const std::vector<double>& omega() const { return omega_; }

    struct State {
        Spectrum pos, vel;
    };
    // Spectral transforms of the initial data.
    State initial_state();

    struct StepInputs {
        // The step's noise increment (already sqrt(dt)-scaled), in whichever
        // representation the caller has; eps and sigma scaling happen here.
        const Spectrum* noise_hat = nullptr;
        const Field* noise_field = nullptr;
        const Spectrum* control_hat = nullptr;  // control slice h(t_j, .)
        // Physical-space state at the step's left endpoint; required when the
        // forcing evaluates sigma(u) or b(u) pointwise (nonconstant family).
        const Field* state_field = nullptr;
    };

    // Advance (pos, vel) across one step of length dt; j is reported in
    // errors. Throws if the state stops being finite.
    void advance(State& state, int j, const StepInputs& in);

    // True when sigma and b are constant, so forcing assembles spectrally and
    // a step touches no physical-space field at all.
    bool forcing_is_linear() const;

    Field materialize(const Spectrum& s) { return tr_.to_field(s); }

private:
    SolverConfig cfg_;
    GaussianFieldSampler sampler_;
    SpectralTransform tr_;
    std::vector<double> omega_;
    std::vector<double> rot_pp_, rot_pv_, rot_vp_;  // one-step rotation entries
    Spectrum forcing_;                              // scratch
};

// Full trajectory from a seeded noise path (no RNG is touched when eps = 0,
// so the eps = 0 result is the skeleton evolution, bitwise).
Trajectory solve(const SolverConfig& config, const Control* control, std::uint64_t seed,
                 bool store_velocity = false);

// Same scheme driven by explicit noise increments.
Trajectory solve(const SolverConfig& config, const Control* control,
                 const NoiseIncrements& noise, bool store_velocity = false);

struct PicardResult {
    Trajectory trajectory;
    int iterations = 0;
    std::vector<double> gaps;  // sup over (j, x) of successive iterate distance
};

// Thrown when the Picard iteration exhausts its budget; carries the observed
// gap sequence for diagnosis.
struct PicardError : std::runtime_error {
    PicardError(const std::string& what, std::vector<double> gaps_);
    std::vector<double> gaps;
};

// Fixed-point construction of the same trajectory: iterate the discrete mild
// map starting from the free evolution, all iterates seeing the same noise
// path. The scheme is causal (left-endpoint forcing), so the n-th iterate is
// exact through time level n and at most J+1 iterates are ever needed.
PicardResult picard_solve(const SolverConfig& config, const Control* control,
                          const NoiseIncrements& noise, double tol,
                          int max_iterations = 0);

}  // namespace swe
