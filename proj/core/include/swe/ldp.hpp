#pragma once

// Small-noise Monte Carlo: per-epsilon exceedance probabilities with Wilson
// intervals, the closed-form Gaussian rate for additive configurations, and
// the -eps log p ladder fit that compares the empirical decay slope against
// the optimizer's rate.

#include "swe/rate.hpp"
#include "swe/solver.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace swe {

// 95% Wilson score interval for a binomial proportion (hits out of
// replicates). Degenerate counts keep exact endpoints: zero hits give lo = 0,
// all hits give hi = 1.
struct WilsonInterval {
    double lo = 0.0;
    double hi = 1.0;
};
WilsonInterval wilson_score(long long hits, int replicates);

struct ProbabilityEstimate {
    EventSpec event;
    double epsilon = 0.0;
    int replicates = 0;
    long long hits = 0;
    double p_hat = 0.0;
    double wilson_lo = 0.0;  // 95% score interval around p_hat
    double wilson_hi = 0.0;
    std::uint64_t seed = 0;
    bool unreliable = false;  // fewer than 10 hits
};

// Runs `replicates` independent trajectories at the given noise size and
// counts exceedances of the event functional applied to the deviation
// u - w, where w is the deterministic zero-noise path. Replicate j draws
// its noise from the derived stream derive(seed, j), so enlarging the
// replicate budget extends the estimate without changing earlier draws.
// Replicates are distributed over `workers` threads; the hit count is a
// worker-independent integer sum.
ProbabilityEstimate estimate_probability(const EventSpec& event,
                                         const SolverConfig& config, double epsilon,
                                         int replicates, std::uint64_t seed,
                                         int workers = 1);

// Exact decay rate of the additive (constant sigma, zero drift) model:
// r^2 / (2 sigma^2 Q), where Q is the variance of the hit functional under
// the discrete scheme, summed over steps and modes in closed form. Only
// final-time functionals (point and linear kinds) have a Gaussian law with
// a one-dimensional sufficient statistic, so only those are accepted.
// A positive `truncation` restricts the mode sum to the same low-frequency
// cube minimize_rate optimizes over, giving the apples-to-apples reference
// for a truncated optimizer; zero means all modes.
double gaussian_rate_oracle(const EventSpec& event, const SolverConfig& config,
                            int truncation = 0);

struct SlopeRung {
    ProbabilityEstimate estimate;
    double neg_eps_log_p = 0.0;  // -eps log p_hat (infinite when no hits)
    double ci_lo = 0.0;          // transformed Wilson interval
    double ci_hi = 0.0;
    bool reliable = false;  // >= 10 hits: eligible for the fit
};

struct SlopeOptions {
    // Externally computed reference rate (e.g. minimize_rate's value). When
    // absent and the configuration is additive with a final-time event, the
    // closed-form oracle is used instead.
    std::optional<double> reference;
    double tolerance = 0.10;  // relative intercept-vs-reference acceptance
    int workers = 1;
};

struct SlopeReport {
    std::vector<SlopeRung> rungs;  // ladder order, strictly decreasing epsilon
    bool insufficient = true;      // fewer than 3 reliable rungs: no fit
    double intercept = 0.0;        // extrapolated rate (eps -> 0 limit)
    double slope = 0.0;            // linear drift of -eps log p in eps
    std::optional<double> reference;
    double tolerance = 0.0;
    bool within_tolerance = false;
};

// Estimates the ladder, transforms to -eps log p with interval endpoints
// mapped through the same transform, fits a line weighted by inverse
// interval width over the reliable rungs, and reports the intercept as the
// empirical rate. Rung i uses the derived seed stream derive(seed, i).
SlopeReport ldp_slope(const EventSpec& event, const SolverConfig& config,
                      const std::vector<double>& epsilons, int replicates,
                      std::uint64_t seed, const SlopeOptions& opts = {});

}  // namespace swe
