#include "swe/runs.hpp"

#include "swe/fft.hpp"
#include "swe/io.hpp"
#include "swe/kernel.hpp"
#include "swe/numerics.hpp"
#include "swe/parallel.hpp"
#include "swe/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace swe::runs {

using nlohmann::json;

CovarianceSpec make_covariance(const cfg::ExperimentConfig& c) {
    PhiSpec phi;
    if (c.phi == "flat")
        phi = PhiSpec::constant(c.phi_value, c.delta);
    else if (c.phi == "bump")
        phi = PhiSpec::gaussian_bump(c.phi_amplitude, c.phi_width, c.delta);
    else
        throw cfg::ConfigError("config: noise.phi must be 'flat' or 'bump', got '" +
                               c.phi + "'");
    return CovarianceSpec(c.beta, phi);
}

InitialData make_initial_data(const cfg::ExperimentConfig& c, const Grid& grid) {
    Field pos(grid), vel(grid);
    if (c.init_family == "zero") {
        // nothing to fill
    } else if (c.init_family == "single_mode") {
        for (int iz = 0; iz < grid.n; ++iz)
            for (int iy = 0; iy < grid.n; ++iy)
                for (int ix = 0; ix < grid.n; ++ix) {
                    double phase = grid.freq(((c.init_mode[0] % grid.n) + grid.n) % grid.n) *
                                       (ix * grid.dx()) +
                                   grid.freq(((c.init_mode[1] % grid.n) + grid.n) % grid.n) *
                                       (iy * grid.dx()) +
                                   grid.freq(((c.init_mode[2] % grid.n) + grid.n) % grid.n) *
                                       (iz * grid.dx());
                    pos(ix, iy, iz) = c.init_amplitude * std::cos(phase);
                }
    } else if (c.init_family == "bump") {
        if (!(c.init_radius > 0.0))
            throw cfg::ConfigError("config: init.radius must be positive");
        if (!(c.init_steepness > 0.0))
            throw cfg::ConfigError("config: init.steepness must be positive");
        const double half = 0.5 * grid.L;
        for (int iz = 0; iz < grid.n; ++iz)
            for (int iy = 0; iy < grid.n; ++iy)
                for (int ix = 0; ix < grid.n; ++ix) {
                    double rx = grid.min_image(ix * grid.dx() - half);
                    double ry = grid.min_image(iy * grid.dx() - half);
                    double rz = grid.min_image(iz * grid.dx() - half);
                    double s2 = (rx * rx + ry * ry + rz * rz) /
                                (c.init_radius * c.init_radius);
                    if (s2 < 1.0)
                        pos(ix, iy, iz) =
                            c.init_amplitude *
                            std::exp(c.init_steepness -
                                     c.init_steepness / (1.0 - s2));
                }
    } else {
        throw cfg::ConfigError(
            "config: init.family must be 'zero', 'single_mode', or 'bump', got '" +
            c.init_family + "'");
    }
    return InitialData(std::move(pos), std::move(vel), c.gamma1, c.gamma2);
}

namespace {

CoefficientSpec::Fn make_fn(const std::string& family, double value, double slope,
                            const std::string& which) {
    if (family == "constant") return CoefficientSpec::Fn::constant(value);
    if (family == "affine") return CoefficientSpec::Fn::affine(value, slope);
    if (family == "bounded_smooth") return CoefficientSpec::Fn::bounded_smooth(value);
    throw cfg::ConfigError("config: coeffs." + which +
                           " must be 'constant', 'affine', or 'bounded_smooth', got '" +
                           family + "'");
}

}  // namespace

CoefficientSpec make_coefficients(const cfg::ExperimentConfig& c) {
    CoefficientSpec spec;
    spec.sigma = make_fn(c.sigma_family, c.sigma_value, c.sigma_slope, "sigma");
    spec.drift = make_fn(c.b_family, c.b_value, c.b_slope, "b");
    return spec;
}

SolverConfig make_solver_config(const cfg::ExperimentConfig& c) {
    Grid grid(c.L, c.N);
    return SolverConfig(grid, c.T, c.J, make_initial_data(c, grid), make_covariance(c),
                        make_coefficients(c), c.epsilon);
}

EventSpec make_event(const cfg::ExperimentConfig& c, const Grid& grid) {
    if (c.event_kind == "point")
        return EventSpec::point_exceed(c.site, c.threshold);
    if (c.event_kind == "sup") {
        Region box(grid, c.box_lo, c.box_hi);
        return EventSpec::sup_exceed(box.box_indices(), c.threshold);
    }
    if (c.event_kind == "linear") {
        Field g(grid);
        for (int iz = 0; iz < grid.n; ++iz)
            for (int iy = 0; iy < grid.n; ++iy)
                for (int ix = 0; ix < grid.n; ++ix) {
                    double phase =
                        grid.freq(((c.event_mode[0] % grid.n) + grid.n) % grid.n) *
                            (ix * grid.dx()) +
                        grid.freq(((c.event_mode[1] % grid.n) + grid.n) % grid.n) *
                            (iy * grid.dx()) +
                        grid.freq(((c.event_mode[2] % grid.n) + grid.n) % grid.n) *
                            (iz * grid.dx());
                    g(ix, iy, iz) = std::cos(phase);
                }
        return EventSpec::linear_exceed(std::move(g), c.threshold);
    }
    throw cfg::ConfigError("config: event.kind must be 'point', 'sup', or 'linear', got '" +
                           c.event_kind + "'");
}

RateOptions make_rate_options(const cfg::ExperimentConfig& c) {
    RateOptions o;
    o.truncation = c.K;
    o.restarts = c.restarts;
    o.outer_iterations = c.outer;
    o.inner_iterations = c.inner;
    o.penalty_init = c.penalty_init;
    o.penalty_growth = c.penalty_growth;
    o.sharpness_init = c.sharpness_init;
    o.sharpness_growth = c.sharpness_growth;
    if (c.norm_bound > 0.0) o.norm_bound = c.norm_bound;
    o.seed = c.seed;
    return o;
}

namespace {

std::string utc_timestamp() {
    std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y%m%dT%H%M%SZ", &tm);
    return buf;
}

void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("run: cannot open " + path.string());
    out << j.dump(2) << '\n';
}

std::ofstream open_csv(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("run: cannot open " + path.string());
    return out;
}

double sup_abs(const Field& f) {
    double s = 0.0;
    for (double v : f.v) s = std::max(s, std::abs(v));
    return s;
}

double l2_norm(const Field& f) {
    double s = 0.0;
    for (double v : f.v) s += v * v;
    double dx = f.grid.dx();
    return std::sqrt(s * dx * dx * dx);
}

std::string status_name(RateReport::Status s) {
    switch (s) {
        case RateReport::Status::Certified: return "certified";
        case RateReport::Status::Local: return "local";
        case RateReport::Status::Infeasible: return "infeasible";
    }
    return "?";
}

std::string run_trajectory(const cfg::ExperimentConfig& c,
                           const std::filesystem::path& dir, const std::string& hash,
                           bool stochastic) {
    cfg::ExperimentConfig cc = c;
    if (!stochastic) cc.epsilon = 0.0;
    SolverConfig sc = make_solver_config(cc);
    const std::string stem = stochastic ? "field" : "skeleton";
    Trajectory traj = solve(sc, nullptr, c.seed);
    io::write_trajectory(dir, stem, traj, hash);

    std::ofstream csv = open_csv(dir / (stem + "_levels.csv"));
    io::CsvWriter w(csv);
    w.row({"level", "time", "sup_abs", "l2", "config_hash"});
    for (std::size_t j = 0; j < traj.position.size(); ++j)
        w.row({std::to_string(j), io::format_double(traj.dt * double(j)),
               io::format_double(sup_abs(traj.position[j])),
               io::format_double(l2_norm(traj.position[j])), hash});

    json summary;
    summary["subcommand"] = stochastic ? "simulate" : "skeleton";
    summary["config_hash"] = hash;
    summary["n"] = sc.grid.n;
    summary["L"] = sc.grid.L;
    summary["steps"] = sc.steps;
    summary["dt"] = sc.dt();
    summary["epsilon"] = cc.epsilon;
    summary["seed"] = c.seed;
    summary["final_sup_abs"] = sup_abs(traj.position.back());
    summary["final_l2"] = l2_norm(traj.position.back());
    write_json(dir / (stem + "_summary.json"), summary);

    std::ostringstream msg;
    msg << stem << ": " << sc.steps << " steps on " << sc.grid.n << "^3, final sup |u| = "
        << io::format_double(sup_abs(traj.position.back()));
    return msg.str();
}

std::string run_rate_min(const cfg::ExperimentConfig& c,
                         const std::filesystem::path& dir, const std::string& hash) {
    SolverConfig sc = make_solver_config(c);
    EventSpec event = make_event(c, sc.grid);
    RateOptions opts = make_rate_options(c);
    RateReport rep = minimize_rate(event, sc, opts);

    std::ofstream csv = open_csv(dir / "rate_trace.csv");
    io::CsvWriter w(csv);
    w.row({"stage", "objective", "config_hash"});
    for (std::size_t i = 0; i < rep.trace.size(); ++i)
        w.row({std::to_string(i), io::format_double(rep.trace[i]), hash});

    json out;
    out["subcommand"] = "rate-min";
    out["config_hash"] = hash;
    out["event_kind"] = c.event_kind;
    out["threshold"] = c.threshold;
    out["rate"] = rep.rate;
    out["residual"] = rep.residual;
    out["status"] = status_name(rep.status);
    out["truncation"] = rep.truncation;
    out["control_norm"] = std::sqrt(2.0 * rep.rate);
    write_json(dir / "rate_report.json", out);

    std::ostringstream msg;
    msg << "rate-min: I = " << io::format_double(rep.rate) << " (" << status_name(rep.status)
        << ", residual " << io::format_double(rep.residual) << ")";
    return msg.str();
}

std::string run_ldp_slope(const cfg::ExperimentConfig& c,
                          const std::filesystem::path& dir, const std::string& hash,
                          int workers) {
    SolverConfig sc = make_solver_config(c);
    EventSpec event = make_event(c, sc.grid);
    SlopeOptions opts;
    opts.tolerance = c.tolerance;
    opts.workers = workers;
    const bool additive =
        sc.coeffs.sigma.is_constant() && sc.coeffs.drift.is_zero();
    if (!(additive && event.kind != EventSpec::Kind::SupExceed)) {
        // No closed form: the optimizer's value is the reference.
        RateReport rep = minimize_rate(event, sc, make_rate_options(c));
        opts.reference = rep.rate;
    }
    SlopeReport rep = ldp_slope(event, sc, c.epsilons, c.M, c.seed, opts);

    std::ofstream csv = open_csv(dir / "slope.csv");
    io::CsvWriter w(csv);
    w.row({"epsilon", "M", "hits", "p_hat", "p_lo", "p_hi", "neg_eps_log_p", "y_lo",
           "y_hi", "reliable", "config_hash"});
    for (const SlopeRung& rung : rep.rungs) {
        const ProbabilityEstimate& e = rung.estimate;
        w.row({io::format_double(e.epsilon), std::to_string(e.replicates),
               std::to_string(e.hits), io::format_double(e.p_hat),
               io::format_double(e.wilson_lo), io::format_double(e.wilson_hi),
               io::format_double(rung.neg_eps_log_p), io::format_double(rung.ci_lo),
               io::format_double(rung.ci_hi), rung.reliable ? "1" : "0", hash});
    }

    json out;
    out["subcommand"] = "ldp-slope";
    out["config_hash"] = hash;
    out["insufficient"] = rep.insufficient;
    out["intercept"] = rep.intercept;
    out["slope"] = rep.slope;
    if (rep.reference) out["reference"] = *rep.reference;
    out["tolerance"] = rep.tolerance;
    out["within_tolerance"] = rep.within_tolerance;
    out["rungs"] = json::array();
    for (const SlopeRung& rung : rep.rungs) {
        json r;
        r["epsilon"] = rung.estimate.epsilon;
        r["hits"] = rung.estimate.hits;
        r["p_hat"] = rung.estimate.p_hat;
        r["neg_eps_log_p"] = rung.neg_eps_log_p;
        r["reliable"] = rung.reliable;
        out["rungs"].push_back(r);
    }
    write_json(dir / "slope.json", out);

    std::ostringstream msg;
    if (rep.insufficient)
        msg << "ldp-slope: insufficient reliable rungs for a fit";
    else
        msg << "ldp-slope: extrapolated rate " << io::format_double(rep.intercept)
            << (rep.reference ? (rep.within_tolerance ? " (within tolerance of reference)"
                                                      : " (outside tolerance)")
                              : "");
    return msg.str();
}

std::string run_holder(const cfg::ExperimentConfig& c, const std::filesystem::path& dir,
                       const std::string& hash) {
    SolverConfig sc = make_solver_config(c);
    Region region(sc.grid, {0, 0, 0}, {sc.grid.n - 1, sc.grid.n - 1, sc.grid.n - 1});
    std::vector<SpaceTimeLag> lags;
    for (int l : c.holder_lags) lags.push_back(SpaceTimeLag::space(l, 0, 0));
    auto make = [&](int i) {
        return solve(sc, nullptr, rng::derive(c.seed, static_cast<std::uint64_t>(i)));
    };
    IncrementFit fit =
        increment_exponent(c.holder_trajectories, make, c.holder_q, lags, region);
    double sample_norm = holder_norm(make(0), c.holder_alpha, region);

    std::ofstream csv = open_csv(dir / "exponent.csv");
    io::CsvWriter w(csv);
    w.row({"lag", "moment", "fit_residual", "config_hash"});
    for (std::size_t l = 0; l < fit.gauges.size(); ++l)
        w.row({io::format_double(fit.gauges[l]), io::format_double(fit.moments[l]),
               io::format_double(fit.residuals[l]), hash});

    json out;
    out["subcommand"] = "holder";
    out["config_hash"] = hash;
    out["alpha_hat"] = fit.alpha_hat;
    out["ci_lo"] = fit.ci_lo;
    out["ci_hi"] = fit.ci_hi;
    out["q"] = c.holder_q;
    out["trajectories"] = c.holder_trajectories;
    out["holder_alpha"] = c.holder_alpha;
    out["holder_norm_sample"] = sample_norm;
    write_json(dir / "exponent.json", out);

    std::ostringstream msg;
    msg << "holder: alpha_hat = " << io::format_double(fit.alpha_hat) << " ["
        << io::format_double(fit.ci_lo) << ", " << io::format_double(fit.ci_hi) << "]";
    return msg.str();
}

std::string run_noise_check(const cfg::ExperimentConfig& c,
                            const std::filesystem::path& dir, const std::string& hash,
                            int workers) {
    CovarianceSpec spec = make_covariance(c);
    Grid grid(c.L, c.N);
    SpectralDensity density(spec, grid);
    SpectralTransform tr(grid);
    Field oracle = covariance_table(density, tr);

    const int nlag = grid.n / 4;
    const int draws = c.M;
    if (draws < 100)
        throw cfg::ConfigError("config: ladder.M must be at least 100 for noise-check");

    // Per-draw per-lag averages land in indexed slots; the final reduction
    // runs in draw order so the bytes cannot depend on the worker count.
    std::vector<double> slot(static_cast<std::size_t>(draws) * (nlag + 1), 0.0);
    const int chunks = std::min(std::max(workers, 1), draws);
    par::for_each_index(chunks, workers, [&](std::size_t ch) {
        const int lo = static_cast<int>(ch) * draws / chunks;
        const int hi = static_cast<int>(ch + 1) * draws / chunks;
        for (int d = lo; d < hi; ++d) {
            Field u = sample_field(spec, grid,
                                   rng::derive(c.seed, static_cast<std::uint64_t>(d)));
            for (int r = 0; r <= nlag; ++r) {
                double acc = 0.0;
                for (int iz = 0; iz < grid.n; ++iz)
                    for (int iy = 0; iy < grid.n; ++iy)
                        for (int ix = 0; ix < grid.n; ++ix)
                            acc += u(ix, iy, iz) * u((ix + r) % grid.n, iy, iz);
                slot[static_cast<std::size_t>(d) * (nlag + 1) + r] =
                    acc / double(grid.size());
            }
        }
    });

    std::vector<double> emp(nlag + 1, 0.0);
    for (int d = 0; d < draws; ++d)
        for (int r = 0; r <= nlag; ++r)
            emp[r] += slot[static_cast<std::size_t>(d) * (nlag + 1) + r];
    for (double& v : emp) v /= draws;

    double max_rel = 0.0;
    std::ofstream csv = open_csv(dir / "noise_covariance.csv");
    io::CsvWriter w(csv);
    w.row({"lag_cells", "lag", "empirical", "oracle", "rel_err", "config_hash"});
    for (int r = 0; r <= nlag; ++r) {
        double truth = oracle(r, 0, 0);
        double rel = std::abs(emp[r] - truth) / std::abs(truth);
        if (r >= 2) max_rel = std::max(max_rel, rel);
        w.row({std::to_string(r), io::format_double(r * grid.dx()),
               io::format_double(emp[r]), io::format_double(truth),
               io::format_double(rel), hash});
    }

    json out;
    out["subcommand"] = "noise-check";
    out["config_hash"] = hash;
    out["draws"] = draws;
    out["band_lo"] = 2 * grid.dx();
    out["band_hi"] = grid.L / 4.0;
    out["max_rel_err_band"] = max_rel;
    out["pass"] = max_rel <= 0.05;
    write_json(dir / "noise_check.json", out);

    std::ostringstream msg;
    msg << "noise-check: max relative covariance error in band = "
        << io::format_double(max_rel) << (max_rel <= 0.05 ? " (pass)" : " (FAIL)");
    return msg.str();
}

std::string run_kernel_check(const std::filesystem::path& dir, const std::string& hash) {
    const std::vector<double> betas = {0.5, 1.0, 1.5};
    const std::vector<double> ts = {0.25, 0.5, 1.0, 2.0};

    std::ofstream csv = open_csv(dir / "kernel_scaling.csv");
    io::CsvWriter w(csv);
    w.row({"beta", "t", "dalang_integral", "config_hash"});

    json slopes = json::object();
    double max_dev = 0.0;
    for (double beta : betas) {
        CovarianceSpec spec(beta, PhiSpec::constant(1.0));
        std::vector<double> xs, ys, ones;
        for (double t : ts) {
            double v = dalang_integral(spec, t);
            w.row({io::format_double(beta), io::format_double(t), io::format_double(v),
                   hash});
            xs.push_back(std::log(t));
            ys.push_back(std::log(v));
            ones.push_back(1.0);
        }
        num::LineFit fit = num::fit_line(xs, ys, ones);
        char key[16];
        std::snprintf(key, sizeof(key), "%.2f", beta);
        slopes[key] = fit.slope;
        max_dev = std::max(max_dev, std::abs(fit.slope - (2.0 - beta)));
    }

    // Near the upper end of the admissible range the integral must blow up
    // monotonically.
    std::vector<double> edge = {1.9, 1.95, 1.99};
    bool monotone = true;
    double prev = 0.0;
    for (std::size_t i = 0; i < edge.size(); ++i) {
        double v = dalang_integral(CovarianceSpec(edge[i], PhiSpec::constant(1.0)), 1.0);
        if (i > 0 && v <= prev) monotone = false;
        prev = v;
    }

    json out;
    out["subcommand"] = "kernel-check";
    out["config_hash"] = hash;
    out["fitted_t_exponents"] = slopes;
    out["max_exponent_deviation"] = max_dev;
    out["divergence_monotone"] = monotone;
    out["pass"] = max_dev <= 1e-2 && monotone;
    write_json(dir / "kernel_check.json", out);

    std::ostringstream msg;
    msg << "kernel-check: max t-exponent deviation " << io::format_double(max_dev)
        << (max_dev <= 1e-2 && monotone ? " (pass)" : " (FAIL)");
    return msg.str();
}

}  // namespace

RunResult run(const std::string& subcommand, const cfg::ExperimentConfig& config,
              int workers, const std::string& timestamp) {
    RunResult res;
    const auto& names = subcommands();
    if (std::find(names.begin(), names.end(), subcommand) == names.end()) {
        res.exit_code = 1;
        res.message = "unknown subcommand '" + subcommand + "'";
        return res;
    }
    std::string hash;
    try {
        hash = config.hash();
        std::string ts = timestamp.empty() ? utc_timestamp() : timestamp;
        res.run_dir = std::filesystem::path(config.out_dir) / (hash + "_" + ts);
        std::filesystem::create_directories(res.run_dir);
        {
            std::ofstream cfg_out(res.run_dir / "config.ini", std::ios::trunc);
            cfg_out << config.canonical();
        }
        if (subcommand == "simulate")
            res.message = run_trajectory(config, res.run_dir, hash, true);
        else if (subcommand == "skeleton")
            res.message = run_trajectory(config, res.run_dir, hash, false);
        else if (subcommand == "rate-min")
            res.message = run_rate_min(config, res.run_dir, hash);
        else if (subcommand == "ldp-slope")
            res.message = run_ldp_slope(config, res.run_dir, hash, workers);
        else if (subcommand == "holder")
            res.message = run_holder(config, res.run_dir, hash);
        else if (subcommand == "noise-check")
            res.message = run_noise_check(config, res.run_dir, hash, workers);
        else if (subcommand == "kernel-check")
            res.message = run_kernel_check(res.run_dir, hash);
        res.exit_code = 0;
    } catch (const std::invalid_argument& e) {
        res.exit_code = 1;
        res.message = e.what();
    } catch (const std::exception& e) {
        res.exit_code = 2;
        res.message = e.what();
        if (!res.run_dir.empty() && std::filesystem::exists(res.run_dir)) {
            std::ofstream diag(res.run_dir / "diagnostics.txt", std::ios::trunc);
            diag << "numerical failure\n" << e.what() << '\n';
        }
    }
    return res;
}

RunResult run_file(const std::string& subcommand,
                   const std::filesystem::path& config_path,
                   const std::vector<std::string>& overrides, int workers,
                   const std::string& timestamp) {
    cfg::ExperimentConfig config;
    try {
        config = cfg::ExperimentConfig::load(config_path, overrides);
    } catch (const std::exception& e) {
        RunResult res;
        res.exit_code = 1;
        res.message = e.what();
        return res;
    }
    return run(subcommand, config, workers, timestamp);
}

}  // namespace swe::runs
