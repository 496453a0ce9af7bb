// Command-line front end. All real work happens in swe::runs; this file only
// parses arguments and reports the run directory.

#include "swe/runs.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <string>
#include <vector>

int main(int argc, char** argv) {
    CLI::App app{"Stochastic wave simulation and rare-event analysis"};
    app.require_subcommand(1);

    struct Parsed {
        std::string name;
        std::string config;
        std::vector<std::string> overrides;
        int workers = 1;
        std::string timestamp;
    } parsed;

    for (const std::string& name : swe::runs::subcommands()) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("config", parsed.config, "experiment config file (ini)")
            ->required();
        sub->add_option("--set", parsed.overrides,
                        "override a resolved value, e.g. --set grid.N=32");
        sub->add_option("--workers", parsed.workers, "worker threads (default 1)");
        sub->add_option("--timestamp", parsed.timestamp,
                        "pin the run directory timestamp (for reproducible paths)");
        sub->callback([&parsed, name] { parsed.name = name; });
    }

    CLI11_PARSE(app, argc, argv);

    swe::runs::RunResult res = swe::runs::run_file(
        parsed.name, parsed.config, parsed.overrides, parsed.workers, parsed.timestamp);
    if (res.exit_code == 0) {
        std::printf("%s\n", res.message.c_str());
        std::printf("run directory: %s\n", res.run_dir.string().c_str());
    } else {
        std::fprintf(stderr, "error: %s\n", res.message.c_str());
    }
    return res.exit_code;
}
