// Command-line front end. Talks to the library only through the C interface;
// every statistic comes from there.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "tperf/tperf.h"

namespace {

struct Flags {
    std::string config;
    std::string data;
    std::string out;
    std::uint64_t seed = 0;
    unsigned threads = 0;
};

void add_flags(CLI::App* cmd, Flags& f, bool config_required) {
    auto* c = cmd->add_option("--config", f.config, "JSON config file");
    if (config_required) c->required();
    cmd->add_option("--data", f.data, "CSV data file (overrides the config)");
    cmd->add_option("--seed", f.seed, "Master seed (overrides the config)");
    cmd->add_option("--out", f.out, "Output directory (overrides the config)");
    cmd->add_option("--threads", f.threads, "Worker threads (overrides the config)")
        ->check(CLI::PositiveNumber);
}

int exit_code(tperf_status s) {
    switch (s) {
        case TPERF_OK: return 0;
        case TPERF_ERR_CONFIG: return 2;
        case TPERF_ERR_DATA: return 3;
        case TPERF_ERR_ESTIMATION: return 4;
        case TPERF_ERR_INVALID_ARGUMENT: return 2;
        case TPERF_ERR_INTERNAL: return 1;
    }
    return 1;
}

int run(const std::string& command, const Flags& f, bool seed_given) {
    std::string text = "{}";
    if (!f.config.empty()) {
        std::ifstream in(f.config, std::ios::binary);
        if (!in) {
            std::cerr << "error: ConfigError: cannot read config '" << f.config << "'\n";
            return 2;
        }
        std::ostringstream buf;
        buf << in.rdbuf();
        text = buf.str();
    }
    tperf_options opts{};
    opts.data_path = f.data.empty() ? nullptr : f.data.c_str();
    opts.out_dir = f.out.empty() ? nullptr : f.out.c_str();
    opts.has_seed = seed_given ? 1 : 0;
    opts.seed = f.seed;
    opts.threads = f.threads;

    tperf_result* result = nullptr;
    tperf_status s = tperf_run(command.c_str(), text.c_str(), &opts, &result);
    if (s != TPERF_OK) {
        std::cerr << "error: " << tperf_last_error() << '\n';
        return exit_code(s);
    }
    s = tperf_result_write(result, nullptr);
    if (s != TPERF_OK) {
        std::cerr << "error: " << tperf_last_error() << '\n';
        tperf_result_free(result);
        return exit_code(s);
    }
    std::cout << tperf_result_csv(result);
    std::cout << "wrote results.json, results.csv, provenance.json to "
              << tperf_result_out_dir(result) << '\n';
    tperf_result_free(result);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Performance of a prediction model in a target population"};
    app.set_version_flag("--version", std::string(tperf_version()));
    app.require_subcommand(1);

    Flags flags;
    auto* evaluate = app.add_subcommand("evaluate", "Estimate performance measures");
    auto* simulate = app.add_subcommand("simulate", "Run the simulation bias study");
    auto* scan = app.add_subcommand("tilt-scan", "Tilted sensitivity over a grid of gamma");
    auto* calibrate = app.add_subcommand("calibrate", "Calibrate tilts to a target prevalence");
    add_flags(evaluate, flags, true);
    add_flags(simulate, flags, false);
    add_flags(scan, flags, true);
    add_flags(calibrate, flags, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    for (auto* cmd : {evaluate, simulate, scan, calibrate}) {
        if (cmd->parsed()) return run(cmd->get_name(), flags, cmd->count("--seed") > 0);
    }
    return 2;
}
