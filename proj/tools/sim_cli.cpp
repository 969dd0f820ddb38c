// SPDX-License-Identifier: Apache-2.0
//
// Monte Carlo experiment runner. One declarative config file per experiment;
// command-line flags override trial count, seed, worker count and plotting.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "chanest/errors.hpp"
#include "chanest/experiment.hpp"
#include "chanest/report.hpp"

namespace {

int run_command(const std::string& config_path, const std::string& out_dir, long trials,
                long seed, long workers, bool plots, bool no_plots) {
    chanest::ExperimentConfig config =
        chanest::config_from_toml(chanest::TomlTable::parse_file(config_path));
    if (trials >= 0)
        config.n_trials = static_cast<int>(trials);
    if (seed >= 0)
        config.seed = static_cast<std::uint64_t>(seed);
    if (workers >= 0)
        config.workers = static_cast<int>(workers);
    if (plots)
        config.emit_plots = true;
    if (no_plots)
        config.emit_plots = false;
    chanest::validate(config);

    const std::vector<chanest::ResultRow> rows = chanest::run_experiment(config);

    std::filesystem::create_directories(out_dir);
    const std::string stem = std::filesystem::path(config_path).stem().string();
    const std::string base = (std::filesystem::path(out_dir) / stem).string();
    chanest::write_csv_file(rows, base + ".csv");
    std::cout << "wrote " << base << ".csv (" << rows.size() << " rows)\n";
    if (config.emit_plots) {
        chanest::write_svg_file(rows, base + ".svg");
        std::cout << "wrote " << base << ".svg\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo harness for massive MIMO composite channel estimation"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "results";
    long trials = -1, seed = -1, workers = -1;
    bool plots = false, no_plots = false;

    CLI::App* run = app.add_subcommand("run", "run one experiment config");
    run->add_option("config", config_path, "experiment config file (TOML)")->required();
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--trials", trials, "override the trial count");
    run->add_option("--seed", seed, "override the RNG seed");
    run->add_option("--workers", workers, "override the worker count (0 = hardware)");
    run->add_flag("--plots", plots, "also write SVG charts");
    run->add_flag("--no-plots", no_plots, "suppress SVG charts");

    CLI::App* scenarios = app.add_subcommand("scenarios", "list known scenario names");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (scenarios->parsed()) {
            using chanest::Scenario;
            for (Scenario s : {Scenario::lsfc_vs_spacing, Scenario::lsfc_vs_m,
                               Scenario::em_vs_proposed, Scenario::ssfc_vs_snr_order,
                               Scenario::theory_mse_surface})
                std::cout << chanest::scenario_name(s) << '\n';
            return 0;
        }
        return run_command(config_path, out_dir, trials, seed, workers, plots, no_plots);
    } catch (const chanest::config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << '\n';
        return 3;
    }
}
