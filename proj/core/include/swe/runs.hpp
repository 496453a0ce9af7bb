#pragma once

// Experiment orchestration: turns a resolved ExperimentConfig into core
// objects, executes one subcommand, and writes hashed artifacts into a run
// directory. The CLI binary is a thin argument-parsing shell over this.

#include "swe/configfile.hpp"
#include "swe/ldp.hpp"
#include "swe/rate.hpp"
#include "swe/regularity.hpp"
#include "swe/solver.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace swe::runs {

// Config-to-domain assembly, shared between subcommands and tests.
CovarianceSpec make_covariance(const cfg::ExperimentConfig& c);
InitialData make_initial_data(const cfg::ExperimentConfig& c, const Grid& grid);
CoefficientSpec make_coefficients(const cfg::ExperimentConfig& c);
SolverConfig make_solver_config(const cfg::ExperimentConfig& c);
EventSpec make_event(const cfg::ExperimentConfig& c, const Grid& grid);
RateOptions make_rate_options(const cfg::ExperimentConfig& c);

inline const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names = {
        "simulate", "skeleton", "rate-min", "ldp-slope",
        "holder",   "noise-check", "kernel-check"};
    return names;
}

struct RunResult {
    int exit_code = 0;  // 0 ok, 1 validation, 2 numerical failure
    std::filesystem::path run_dir;
    std::string message;
};

// Executes one subcommand. The run directory is <output.directory>/<config
// hash>_<timestamp>; a caller-supplied timestamp pins the directory name
// (otherwise UTC wall clock). All payload bytes depend only on the resolved
// config, never on the worker count or the clock.
RunResult run(const std::string& subcommand, const cfg::ExperimentConfig& config,
              int workers = 1, const std::string& timestamp = "");

RunResult run_file(const std::string& subcommand,
                   const std::filesystem::path& config_path,
                   const std::vector<std::string>& overrides, int workers = 1,
                   const std::string& timestamp = "");

}  // namespace swe::runs
