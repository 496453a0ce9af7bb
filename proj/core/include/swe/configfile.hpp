#pragma once

// Experiment configuration: strict INI-style key-value files with sections,
// left-to-right overrides, resolved-value canonicalization, and the FNV-1a
// fingerprint every artifact embeds.

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace swe::cfg {

// Raised for parse errors, unknown keys, and malformed values; the CLI maps
// it (like every validation failure) to exit code 1.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Every knob of every subcommand, with defaults matching the reference
// experiment. Unknown sections or keys are rejected, so a typo cannot
// silently fall back to a default.
struct ExperimentConfig {
    // [grid]
    double L = 8.0;
    int N = 16;
    // [time]
    double T = 1.0;
    int J = 64;
    // [noise]
    double beta = 1.0;
    std::string phi = "flat";  // flat | bump
    double phi_value = 1.0;
    double phi_amplitude = 1.0;
    double phi_width = 1.0;
    double delta = 1.0;
    std::uint64_t seed = 0;
    double epsilon = 1.0;
    // [init]
    std::string init_family = "zero";  // zero | single_mode | bump
    double init_amplitude = 1.0;
    std::array<int, 3> init_mode{1, 0, 0};
    double init_radius = 2.0;
    double init_steepness = 9.0;
    double gamma1 = 1.0;
    double gamma2 = 1.0;
    // [coeffs]
    std::string sigma_family = "constant";  // constant | affine | bounded_smooth
    double sigma_value = 1.0;
    double sigma_slope = 0.0;
    std::string b_family = "constant";
    double b_value = 0.0;
    double b_slope = 0.0;
    // [event]
    std::string event_kind = "point";  // point | sup | linear
    double threshold = 1.0;
    std::array<int, 3> site{0, 0, 0};
    std::array<int, 3> box_lo{0, 0, 0};
    std::array<int, 3> box_hi{0, 0, 0};
    std::array<int, 3> event_mode{1, 0, 0};
    // [ladder]
    std::vector<double> epsilons{1.0, 0.5, 0.25, 0.125};
    int M = 10000;
    // [optimizer]
    int K = 8;
    int restarts = 3;
    int outer = 8;
    int inner = 150;
    double penalty_init = 4.0;
    double penalty_growth = 6.0;
    double sharpness_init = 32.0;
    double sharpness_growth = 2.0;
    double norm_bound = 0.0;  // 0 means unconstrained
    double tolerance = 0.1;
    // [holder]
    double holder_alpha = 0.4;
    double holder_q = 2.0;
    int holder_trajectories = 200;
    std::vector<int> holder_lags{1, 2, 4, 6, 10};
    // [output]
    std::string out_dir = "runs";
    std::string out_formats = "csv,json";

    // Parse + override + resolve. Overrides are "section.key=value" strings
    // applied after the file, left to right.
    static ExperimentConfig from_text(const std::string& text,
                                      const std::vector<std::string>& overrides = {});
    static ExperimentConfig load(const std::filesystem::path& path,
                                 const std::vector<std::string>& overrides = {});

    // Fixed-order, fully resolved rendering: the hash input and the verbatim
    // dump placed in every run directory.
    std::string canonical() const;

    // hex16(fnv1a(canonical())).
    std::string hash() const;
};

}  // namespace swe::cfg
