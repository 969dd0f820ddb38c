// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "chanest/channel_model.hpp"
#include "chanest/rr_basis.hpp"
#include "chanest/toml_lite.hpp"

namespace chanest {

enum class Scenario {
    lsfc_vs_spacing,
    lsfc_vs_m,
    em_vs_proposed,
    ssfc_vs_snr_order,
    theory_mse_surface,
};

const char* scenario_name(Scenario s);

// One declarative Monte Carlo experiment. Defaults mirror the reference
// setup: 100-antenna ULA at half-wavelength spacing, 8 users in a 100 m cell,
// pathloss exponent 3, 10 dB shadowing, one 20-subpath arrival cluster.
struct ExperimentConfig {
    Scenario scenario = Scenario::lsfc_vs_spacing;

    int n_antennas = 100;
    int n_users = 8;
    int pilot_len = 8;

    double cell_radius_m = 100.0;
    double pathloss_exp = 3.0;
    double shadowing_db = 10.0;

    double angle_spread_deg = 15.0;
    PasKind pas = PasKind::scm_subpaths;
    double spacing_wl = 0.5;
    double mean_aoa_deg = 30.0; // alignment used by the formula surface

    std::vector<double> snr_db = {10.0};
    std::vector<double> spacing_sweep = {0.5, 1.0, 2.0, 4.0};
    std::vector<int> antenna_sweep = {50, 100, 200};
    std::vector<int> modeling_orders = {10, 30, 100};
    std::vector<int> j_blocks = {1, 10};
    std::vector<BasisKind> bases = {BasisKind::dct2, BasisKind::polynomial};

    int n_trials = 1000;
    std::uint64_t seed = 1;
    int workers = 0; // 0 = hardware concurrency
    int em_iters = 10;
    bool emit_plots = false;
};

ExperimentConfig config_from_toml(const TomlTable& table);
ExperimentConfig load_config(const std::string& path);

// Throws config_error naming every offending field.
void validate(const ExperimentConfig& config);

// One metric at one sweep coordinate.
struct ResultRow {
    std::string scenario;
    std::vector<std::pair<std::string, std::string>> keys;
    std::string metric;
    double value = 0.0;
    long n = 0;
    double std_error = 0.0;
};

// Runs the configured scenario. Deterministic in (config, seed): rows are
// bitwise identical for any worker count.
std::vector<ResultRow> run_experiment(const ExperimentConfig& config);

} // namespace chanest
