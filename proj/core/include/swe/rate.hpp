// Deterministic controlled evolution (the zero-noise skeleton), the quadratic
// action of a control path, and a penalized optimizer that finds the cheapest
// control driving the skeleton into a target event. Event cost profiles are
// what the Monte Carlo side compares its log-probability slopes against.
#pragma once

#include "swe/solver.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace swe {

struct EventSpec {
    enum class Kind { PointExceed, SupExceed, LinearExceed };

    Kind kind = Kind::PointExceed;
    std::array<int, 3> site{};         // PointExceed: lattice site x0
    std::vector<std::size_t> region;   // SupExceed: linear lattice indices
    Field test_field;                  // LinearExceed: weight g
    double threshold = 0.0;            // r

    // Event: u(T, x0) - w(T, x0) >= r.
    static EventSpec point_exceed(std::array<int, 3> site, double threshold);
    // Event: sup over region x all time levels of |u - w| >= r.
    static EventSpec sup_exceed(std::vector<std::size_t> region, double threshold);
    // Event: <u(T,.) - w(T,.), g>  >= r, with the dx^3-weighted lattice pairing.
    static EventSpec linear_exceed(Field test_field, double threshold);

    void validate(const Grid& grid) const;
};

// dx^3-weighted lattice inner product (Riemann sum of the L^2 pairing).
double lattice_inner(const Field& a, const Field& b);

// Folds per-step difference fields u(t_j) - w(t_j) into the event's
// functional value: final-time point gap, final-time pairing, or running sup
// of |diff| over the region.
class EventTracker {
public:
    // Keeps its own copy of the spec, so the argument may be a temporary.
    EventTracker(const EventSpec& event, const Grid& grid, int steps);

    // Sup events look at every time level; the others only at the final one.
    bool needs_every_step() const;
    void offer(int step, const Field& diff);
    double value() const;
    void reset();

private:
    EventSpec event_;
    Grid grid_;
    int steps_;
    double value_ = 0.0;
    bool saw_final_ = false;
};

Trajectory skeleton_solve(const SolverConfig& config, const Control& h);

// One half of the squared control-path norm.
double rate_functional(const Control& h);

struct RateOptions {
    // Optimize over lattice modes whose integer components all lie in
    // [-truncation/2, truncation/2] (low modes; the forward map smooths, so
    // optimal controls carry no high frequencies).
    int truncation = 8;
    int restarts = 3;
    int outer_iterations = 8;     // penalty/multiplier stages
    int inner_iterations = 150;   // quasi-Newton iterations per stage
    double penalty_init = 4.0;
    double penalty_growth = 6.0;
    double sharpness_init = 32.0;   // smooth-max sharpening for sup events
    double sharpness_growth = 2.0;
    double feasibility_rel = 1e-6;  // accepted residual, relative to threshold
    std::optional<double> norm_bound;  // restrict to a control-norm ball
    std::uint64_t seed = 0;            // stream for restart perturbations
};

struct RateReport {
    enum class Status {
        Certified,   // convex problem (constant sigma): global optimum
        Local,       // smooth-coefficient path: stationary point only
        Infeasible,  // no control within budget reached the event
    };

    EventSpec event;
    Control optimal;
    double rate = 0.0;      // 0.5 * ||h*||^2
    double residual = 0.0;  // max(0, r - functional) after replay through skeleton_solve
    std::vector<double> trace;        // best objective after each penalty stage
    std::vector<double> start_rates;  // final rate per restart, in start order
                                      // (agreement across starts is the
                                      // practical convexity certificate)
    Status status = Status::Infeasible;
    int truncation = 0;
};

// Minimize 0.5 ||h||^2 subject to the skeleton hitting the event, by an
// augmented-Lagrangian penalty on the (smoothed, for sup events) constraint,
// multi-start quasi-Newton inner solves, and a final exact scaling polish.
RateReport minimize_rate(const EventSpec& event, const SolverConfig& config,
                         const RateOptions& opts = {});

}  // namespace swe
