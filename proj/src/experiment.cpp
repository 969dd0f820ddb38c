// SPDX-License-Identifier: Apache-2.0
#include "chanest/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <mutex>
#include <set>
#include <thread>

#include "chanest/analysis.hpp"
#include "chanest/em_baseline.hpp"
#include "chanest/errors.hpp"
#include "chanest/lsfc_estimator.hpp"
#include "chanest/pilots.hpp"
#include "chanest/ssfc_estimator.hpp"

namespace chanest {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

namespace {

constexpr double kDegToRad = M_PI / 180.0;

// Substream tags keeping every random quantity of a trial on its own stream.
namespace tag {
constexpr std::uint64_t geometry = 1;
constexpr std::uint64_t aoa = 2;
constexpr std::uint64_t prior = 3;
constexpr std::uint64_t channel = 1000; // + block (+ sweep offset where dims change)
constexpr std::uint64_t noise = 60000;  // + block (+ sweep offset where dims change)
} // namespace tag

std::string fmt_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

// --------------------------------------------------------------------------
// Configuration plumbing
// --------------------------------------------------------------------------

Scenario scenario_from_name(const std::string& name) {
    if (name == "lsfc_vs_spacing") return Scenario::lsfc_vs_spacing;
    if (name == "lsfc_vs_m") return Scenario::lsfc_vs_m;
    if (name == "em_vs_proposed") return Scenario::em_vs_proposed;
    if (name == "ssfc_vs_snr_order") return Scenario::ssfc_vs_snr_order;
    if (name == "theory_mse_surface") return Scenario::theory_mse_surface;
    throw config_error("unknown scenario '" + name + "'");
}

BasisKind basis_from_name(const std::string& name) {
    if (name == "poly" || name == "polynomial") return BasisKind::polynomial;
    if (name == "dct" || name == "dct2") return BasisKind::dct2;
    if (name == "klt") return BasisKind::klt;
    throw config_error("unknown basis '" + name + "'");
}

std::vector<int> to_int_list(const std::vector<double>& values, const std::string& key) {
    std::vector<int> out;
    out.reserve(values.size());
    for (double v : values) {
        if (v != std::floor(v))
            throw config_error("key '" + key + "' must hold integers");
        out.push_back(static_cast<int>(v));
    }
    return out;
}

} // namespace

const char* scenario_name(Scenario s) {
    switch (s) {
    case Scenario::lsfc_vs_spacing: return "lsfc_vs_spacing";
    case Scenario::lsfc_vs_m: return "lsfc_vs_m";
    case Scenario::em_vs_proposed: return "em_vs_proposed";
    case Scenario::ssfc_vs_snr_order: return "ssfc_vs_snr_order";
    case Scenario::theory_mse_surface: return "theory_mse_surface";
    }
    return "?";
}

ExperimentConfig config_from_toml(const TomlTable& table) {
    static const std::set<std::string> known = {
        "scenario",      "antennas",      "users",         "pilot_len",
        "cell_radius_m", "pathloss_exponent", "shadowing_db",  "angle_spread_deg",
        "pas",           "spacing",       "mean_aoa_deg",  "snr_db",
        "spacing_sweep", "antenna_sweep", "orders",        "j_blocks",
        "bases",         "trials",        "seed",          "workers",
        "em_iters",      "plots",
    };
    for (const std::string& key : table.keys())
        if (!known.count(key))
            throw config_error("unknown config key '" + key + "'");

    ExperimentConfig cfg;
    cfg.scenario = scenario_from_name(table.string("scenario"));
    cfg.n_antennas = static_cast<int>(table.integer_or("antennas", cfg.n_antennas));
    cfg.n_users = static_cast<int>(table.integer_or("users", cfg.n_users));
    cfg.pilot_len = static_cast<int>(table.integer_or("pilot_len", cfg.pilot_len));
    cfg.cell_radius_m = table.number_or("cell_radius_m", cfg.cell_radius_m);
    cfg.pathloss_exp = table.number_or("pathloss_exponent", cfg.pathloss_exp);
    cfg.shadowing_db = table.number_or("shadowing_db", cfg.shadowing_db);
    cfg.angle_spread_deg = table.number_or("angle_spread_deg", cfg.angle_spread_deg);
    const std::string pas = table.string_or("pas", "scm");
    if (pas == "scm")
        cfg.pas = PasKind::scm_subpaths;
    else if (pas == "uniform")
        cfg.pas = PasKind::uniform;
    else
        throw config_error("key 'pas' must be \"scm\" or \"uniform\"");
    cfg.spacing_wl = table.number_or("spacing", cfg.spacing_wl);
    cfg.mean_aoa_deg = table.number_or("mean_aoa_deg", cfg.mean_aoa_deg);
    cfg.snr_db = table.number_list_or("snr_db", cfg.snr_db);
    cfg.spacing_sweep = table.number_list_or("spacing_sweep", cfg.spacing_sweep);
    if (table.has("antenna_sweep"))
        cfg.antenna_sweep = to_int_list(table.number_list("antenna_sweep"), "antenna_sweep");
    if (table.has("orders"))
        cfg.modeling_orders = to_int_list(table.number_list("orders"), "orders");
    if (table.has("j_blocks"))
        cfg.j_blocks = to_int_list(table.number_list("j_blocks"), "j_blocks");
    if (table.has("bases")) {
        cfg.bases.clear();
        for (const std::string& name : table.string_list_or("bases", {}))
            cfg.bases.push_back(basis_from_name(name));
    }
    cfg.n_trials = static_cast<int>(table.integer_or("trials", cfg.n_trials));
    cfg.seed = static_cast<std::uint64_t>(table.integer_or("seed", 1));
    cfg.workers = static_cast<int>(table.integer_or("workers", cfg.workers));
    cfg.em_iters = static_cast<int>(table.integer_or("em_iters", cfg.em_iters));
    cfg.emit_plots = table.boolean_or("plots", cfg.emit_plots);
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    ExperimentConfig cfg = config_from_toml(TomlTable::parse_file(path));
    validate(cfg);
    return cfg;
}

void validate(const ExperimentConfig& config) {
    std::vector<std::string> bad;
    auto complain = [&bad](const std::string& field, const std::string& why) {
        bad.push_back(field + " (" + why + ")");
    };

    if (config.n_users < 1)
        complain("users", "must be at least 1");
    if (config.pilot_len < config.n_users)
        complain("pilot_len", "must be at least the user count");
    if (config.n_antennas < config.pilot_len)
        complain("antennas", "must be at least the pilot length");
    if (!(config.pathloss_exp > 2.0))
        complain("pathloss_exponent", "must exceed 2");
    if (config.shadowing_db < 0.0)
        complain("shadowing_db", "cannot be negative");
    if (!(config.cell_radius_m > 1.0))
        complain("cell_radius_m", "must exceed the 1 m minimum distance");
    if (config.angle_spread_deg < 0.0)
        complain("angle_spread_deg", "cannot be negative");
    if (!(config.spacing_wl > 0.0))
        complain("spacing", "must be positive");
    if (std::abs(config.mean_aoa_deg) > 90.0)
        complain("mean_aoa_deg", "must lie in [-90, 90]");
    if (config.n_trials < 1)
        complain("trials", "must be at least 1");
    if (config.workers < 0)
        complain("workers", "cannot be negative");
    if (config.em_iters < 0)
        complain("em_iters", "cannot be negative");
    if (config.snr_db.empty())
        complain("snr_db", "sweep list cannot be empty");
    if (config.bases.empty())
        complain("bases", "sweep list cannot be empty");
    if (config.j_blocks.empty())
        complain("j_blocks", "sweep list cannot be empty");
    for (int j : config.j_blocks)
        if (j < 1) {
            complain("j_blocks", "entries must be at least 1");
            break;
        }
    if (config.scenario == Scenario::lsfc_vs_spacing) {
        if (config.spacing_sweep.empty())
            complain("spacing_sweep", "sweep list cannot be empty");
        for (double s : config.spacing_sweep)
            if (!(s > 0.0)) {
                complain("spacing_sweep", "entries must be positive");
                break;
            }
    }
    if (config.scenario == Scenario::lsfc_vs_m) {
        if (config.antenna_sweep.empty())
            complain("antenna_sweep", "sweep list cannot be empty");
        for (int m : config.antenna_sweep)
            if (m < config.pilot_len) {
                complain("antenna_sweep", "entries must be at least the pilot length");
                break;
            }
    }
    if (config.scenario == Scenario::ssfc_vs_snr_order) {
        if (config.modeling_orders.empty())
            complain("orders", "sweep list cannot be empty");
        for (int m : config.modeling_orders)
            if (m < 1 || m > config.n_antennas) {
                complain("orders", "entries must lie in [1, antennas]");
                break;
            }
        for (BasisKind kind : config.bases)
            if (kind == BasisKind::klt) {
                complain("bases", "klt is channel-dependent; Monte Carlo sweeps use poly/dct");
                break;
            }
    }

    if (!bad.empty()) {
        std::string msg = "invalid experiment configuration: ";
        for (std::size_t i = 0; i < bad.size(); ++i)
            msg += (i ? "; " : "") + bad[i];
        throw config_error(msg);
    }
}

// --------------------------------------------------------------------------
// Trial-parallel execution with deterministic reduction
// --------------------------------------------------------------------------

namespace {

void parallel_trials(int n_trials, int workers, const std::function<void(int)>& body) {
    int n_workers = workers > 0 ? workers
                                : static_cast<int>(std::thread::hardware_concurrency());
    n_workers = std::clamp(n_workers, 1, std::max(1, n_trials));
    if (n_workers == 1) {
        for (int t = 0; t < n_trials; ++t)
            body(t);
        return;
    }
    std::atomic<int> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (int w = 0; w < n_workers; ++w) {
        pool.emplace_back([&] {
            while (true) {
                const int t = next.fetch_add(1);
                if (t >= n_trials)
                    return;
                try {
                    body(t);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error)
                        error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (std::thread& th : pool)
        th.join();
    if (error)
        std::rethrow_exception(error);
}

// Ratio-of-sums accumulator with standard errors from 20 contiguous trial
// batches. Per-trial contributions are stored by the workers slot-wise and
// reduced here in trial order, so results never depend on scheduling.
class BatchReducer {
public:
    BatchReducer(int n_trials, int n_batches = 20)
        : n_trials_(n_trials), n_batches_(std::min(n_batches, n_trials)),
          num_(n_batches_, 0.0), den_(n_batches_, 0.0) {}

    void add(int trial, double num, double den) {
        const int b = static_cast<int>(static_cast<long>(trial) * n_batches_ / n_trials_);
        num_[b] += num;
        den_[b] += den;
        total_num_ += num;
        total_den_ += den;
    }

    bool empty() const { return total_den_ <= 0.0; }
    double ratio() const { return total_den_ > 0.0 ? total_num_ / total_den_ : 0.0; }
    long samples() const { return static_cast<long>(total_den_); }

    double std_error() const {
        std::vector<double> ratios;
        for (int b = 0; b < n_batches_; ++b)
            if (den_[b] > 0.0)
                ratios.push_back(num_[b] / den_[b]);
        if (ratios.size() < 2)
            return 0.0;
        double mean = 0.0;
        for (double r : ratios)
            mean += r;
        mean /= static_cast<double>(ratios.size());
        double var = 0.0;
        for (double r : ratios)
            var += (r - mean) * (r - mean);
        var /= static_cast<double>(ratios.size() - 1);
        return std::sqrt(var / static_cast<double>(ratios.size()));
    }

private:
    int n_trials_;
    int n_batches_;
    std::vector<double> num_, den_;
    double total_num_ = 0.0, total_den_ = 0.0;
};

using TrialSlots = std::vector<std::pair<double, double>>;

std::vector<BatchReducer> run_slotted(int n_trials, int workers, int n_slots,
                                      const std::function<TrialSlots(int)>& trial_fn) {
    std::vector<TrialSlots> per_trial(n_trials);
    parallel_trials(n_trials, workers, [&](int t) { per_trial[t] = trial_fn(t); });

    std::vector<BatchReducer> reducers(n_slots, BatchReducer(n_trials));
    for (int t = 0; t < n_trials; ++t) {
        if (static_cast<int>(per_trial[t].size()) != n_slots)
            throw numeric_error("trial produced an unexpected slot count");
        for (int s = 0; s < n_slots; ++s)
            reducers[s].add(t, per_trial[t][s].first, per_trial[t][s].second);
    }
    return reducers;
}

// --------------------------------------------------------------------------
// Shared pieces
// --------------------------------------------------------------------------

struct Keys {
    std::vector<std::pair<std::string, std::string>> kv;
    Keys& set(const std::string& name, const std::string& value) {
        kv.emplace_back(name, value);
        return *this;
    }
    Keys& set(const std::string& name, double value) { return set(name, fmt_num(value)); }
    Keys& set(const std::string& name, int value) {
        return set(name, std::to_string(value));
    }
};

ResultRow make_row(const ExperimentConfig& cfg, Keys keys, const std::string& metric,
                   const BatchReducer& red) {
    ResultRow row;
    row.scenario = scenario_name(cfg.scenario);
    row.keys = std::move(keys.kv);
    row.metric = metric;
    row.value = red.ratio();
    row.n = red.samples();
    row.std_error = red.std_error();
    return row;
}

ResultRow make_value_row(const ExperimentConfig& cfg, Keys keys, const std::string& metric,
                         double value) {
    ResultRow row;
    row.scenario = scenario_name(cfg.scenario);
    row.keys = std::move(keys.kv);
    row.metric = metric;
    row.value = value;
    row.n = 0;
    row.std_error = 0.0;
    return row;
}

SpatialProfile profile_for(const ExperimentConfig& cfg, double aoa_rad, double spacing) {
    const double spread = cfg.angle_spread_deg * kDegToRad;
    return cfg.pas == PasKind::scm_subpaths
               ? SpatialProfile::scm(aoa_rad, spread, spacing)
               : SpatialProfile::uniform_pas(aoa_rad, spread, spacing);
}

// Sampling factor per user: subpath matrix for the discrete cluster profile,
// Hermitian square root otherwise.
std::vector<MatrixXcd> channel_factors(const ExperimentConfig& cfg, int n_antennas,
                                       const VectorXd& aoas, double spacing) {
    std::vector<MatrixXcd> factors;
    factors.reserve(aoas.size());
    for (int k = 0; k < aoas.size(); ++k) {
        const SpatialProfile profile = profile_for(cfg, aoas[k], spacing);
        if (cfg.pas == PasKind::scm_subpaths)
            factors.push_back(scm_subpath_factor(n_antennas, profile));
        else
            factors.push_back(correlation_from_profile(n_antennas, profile).sqrt());
    }
    return factors;
}

VectorXd draw_aoas(const ExperimentConfig& cfg, std::uint64_t stream, std::uint64_t substream) {
    RngStream rng(cfg.seed, stream, substream);
    VectorXd aoas(cfg.n_users);
    for (int k = 0; k < cfg.n_users; ++k)
        aoas[k] = (rng.uniform() * 120.0 - 60.0) * kDegToRad;
    return aoas;
}

MatrixXcd draw_gaussians(int rows, int cols, RngStream& rng) {
    MatrixXcd g(rows, cols);
    for (int c = 0; c < cols; ++c)
        for (int r = 0; r < rows; ++r)
            g(r, c) = rng.cnormal();
    return g;
}

MatrixXcd apply_factors(const std::vector<MatrixXcd>& factors, const MatrixXcd& g) {
    const int m = static_cast<int>(factors.front().rows());
    MatrixXcd h(m, static_cast<int>(factors.size()));
    for (std::size_t k = 0; k < factors.size(); ++k)
        h.col(k) = factors[k] * g.col(static_cast<int>(k));
    return h;
}

LargeScaleParams large_scale_params(const ExperimentConfig& cfg) {
    return LargeScaleParams(cfg.pathloss_exp, cfg.shadowing_db, cfg.cell_radius_m);
}

// --------------------------------------------------------------------------
// Scenario: LSFC estimation quality versus antenna spacing / array size
// --------------------------------------------------------------------------

// Slot layout per sweep point: j_blocks x (nmse, fail) then conventional
// (nmse, fail).
std::vector<ResultRow> run_lsfc_sweep(const ExperimentConfig& cfg, bool sweep_antennas) {
    const int n_points = sweep_antennas ? static_cast<int>(cfg.antenna_sweep.size())
                                        : static_cast<int>(cfg.spacing_sweep.size());
    const int n_j = static_cast<int>(cfg.j_blocks.size());
    const int slots_per_point = 2 * n_j + 2;
    const int n_slots = n_points * slots_per_point;
    const int max_j = *std::max_element(cfg.j_blocks.begin(), cfg.j_blocks.end());
    const double snr = std::pow(10.0, cfg.snr_db.front() / 10.0);
    const LargeScaleParams params = large_scale_params(cfg);
    const double db_var = lsfc_db_variance(params);

    // User directions are fixed for the experiment; the per-user channel
    // factors are then built once per sweep point instead of per trial.
    const VectorXd aoas = draw_aoas(cfg, 0, tag::aoa);
    std::vector<std::vector<MatrixXcd>> factors_by_point(n_points);
    for (int point = 0; point < n_points; ++point) {
        const int m = sweep_antennas ? cfg.antenna_sweep[point] : cfg.n_antennas;
        const double spacing = sweep_antennas ? cfg.spacing_wl : cfg.spacing_sweep[point];
        factors_by_point[point] = channel_factors(cfg, m, aoas, spacing);
    }

    auto trial_fn = [&](int trial) -> TrialSlots {
        TrialSlots slots(n_slots, {0.0, 0.0});

        for (int point = 0; point < n_points; ++point) {
            const int m = sweep_antennas ? cfg.antenna_sweep[point] : cfg.n_antennas;
            const SystemDims dims(m, cfg.n_users, cfg.pilot_len, max_j);

            // Geometry is shared across sweep points (common random numbers
            // where the dimensions allow it).
            RngStream geo_rng(cfg.seed, static_cast<std::uint64_t>(trial) + 1, tag::geometry);
            const LargeScaleRealization lsfc = gen_lsfc(dims, params, geo_rng);
            const PilotMatrix pilots = orthogonal_pilots(
                cfg.n_users, cfg.pilot_len, power_for_target_snr(lsfc.beta, snr));

            const std::vector<MatrixXcd>& factors = factors_by_point[point];
            const std::uint64_t sweep_offset =
                sweep_antennas ? 128ULL * static_cast<std::uint64_t>(point) : 0ULL;

            std::vector<ReceivedBlock> blocks;
            blocks.reserve(max_j);
            MatrixXcd h_first;
            for (int j = 0; j < max_j; ++j) {
                RngStream ch_rng(cfg.seed, static_cast<std::uint64_t>(trial) + 1,
                                 tag::channel + sweep_offset + static_cast<std::uint64_t>(j));
                const MatrixXcd g =
                    draw_gaussians(static_cast<int>(factors.front().cols()), cfg.n_users, ch_rng);
                const MatrixXcd h = apply_factors(factors, g);
                if (j == 0)
                    h_first = h;
                RngStream noise_rng(cfg.seed, static_cast<std::uint64_t>(trial) + 1,
                                    tag::noise + sweep_offset + static_cast<std::uint64_t>(j));
                ReceivedBlock block;
                block.y.noalias() = h * lsfc.beta.cwiseSqrt().asDiagonal() * pilots.rows();
                block.y += draw_gaussians(m, cfg.pilot_len, noise_rng);
                blocks.push_back(std::move(block));
            }

            const int base = point * slots_per_point;
            for (int ji = 0; ji < n_j; ++ji) {
                const std::vector<ReceivedBlock> subset(blocks.begin(),
                                                        blocks.begin() + cfg.j_blocks[ji]);
                const LsfcEstimate est = estimate_lsfc_multi(subset, pilots);
                for (int k = 0; k < cfg.n_users; ++k) {
                    if (est.beta_hat[k] > 0.0) {
                        const double err_db =
                            10.0 * std::log10(est.beta_hat[k] / lsfc.beta[k]);
                        slots[base + 2 * ji].first += err_db * err_db / db_var;
                    } else {
                        slots[base + 2 * ji + 1].first += 1.0;
                    }
                    slots[base + 2 * ji].second += est.beta_hat[k] > 0.0 ? 1.0 : 0.0;
                    slots[base + 2 * ji + 1].second += 1.0;
                }
            }

            const VectorXd conv = conventional_lsfc_ls(blocks.front(), h_first, pilots);
            for (int k = 0; k < cfg.n_users; ++k) {
                if (conv[k] > 0.0) {
                    const double err_db = 10.0 * std::log10(conv[k] / lsfc.beta[k]);
                    slots[base + 2 * n_j].first += err_db * err_db / db_var;
                } else {
                    slots[base + 2 * n_j + 1].first += 1.0;
                }
                slots[base + 2 * n_j].second += conv[k] > 0.0 ? 1.0 : 0.0;
                slots[base + 2 * n_j + 1].second += 1.0;
            }
        }
        return slots;
    };

    const std::vector<BatchReducer> reducers =
        run_slotted(cfg.n_trials, cfg.workers, n_slots, trial_fn);

    std::vector<ResultRow> rows;
    const std::string sweep_key = sweep_antennas ? "antennas" : "spacing";
    for (int point = 0; point < n_points; ++point) {
        const std::string sweep_value = sweep_antennas ? std::to_string(cfg.antenna_sweep[point])
                                                       : fmt_num(cfg.spacing_sweep[point]);
        const int base = point * slots_per_point;
        for (int ji = 0; ji < n_j; ++ji) {
            Keys keys;
            keys.set(sweep_key, sweep_value)
                .set("j", cfg.j_blocks[ji])
                .set("estimator", "proposed");
            rows.push_back(make_row(cfg, keys, "nmse_lsfc_db", reducers[base + 2 * ji]));
            rows.push_back(make_row(cfg, keys, "failure_rate", reducers[base + 2 * ji + 1]));
        }
        Keys keys;
        keys.set(sweep_key, sweep_value).set("j", 1).set("estimator", "conventional");
        rows.push_back(make_row(cfg, keys, "nmse_lsfc_db", reducers[base + 2 * n_j]));
        rows.push_back(make_row(cfg, keys, "failure_rate", reducers[base + 2 * n_j + 1]));
    }
    return rows;
}

// --------------------------------------------------------------------------
// Scenario: EM / MEM joint estimation versus the decoupled estimators
// --------------------------------------------------------------------------

std::vector<ResultRow> run_em_vs_proposed(const ExperimentConfig& cfg) {
    const int n_users = cfg.n_users;
    const int n_iters = cfg.em_iters;
    const double snr = std::pow(10.0, cfg.snr_db.front() / 10.0);
    const LargeScaleParams params = large_scale_params(cfg);
    const double db_var = lsfc_db_variance(params);
    const int m = cfg.n_antennas;

    // User directions are fixed for the whole experiment so the per-user
    // correlation eigenbases are computed once.
    const VectorXd aoas = draw_aoas(cfg, 0, tag::aoa);
    std::vector<CorrelationMatrix> correlations;
    std::vector<MatrixXcd> factors;
    for (int k = 0; k < n_users; ++k) {
        const SpatialProfile profile = profile_for(cfg, aoas[k], cfg.spacing_wl);
        correlations.push_back(correlation_from_profile(m, profile));
        factors.push_back(cfg.pas == PasKind::scm_subpaths
                              ? scm_subpath_factor(m, profile)
                              : correlations.back().sqrt());
    }
    const EmCorrelationCache cache(correlations);
    RngStream prior_rng(cfg.seed, 0, tag::prior);
    const EmPrior prior = em_prior_from_model(n_users, params, prior_rng);

    // Slots: per variant (em, mem) and iteration 0..n: lsfc (nmse, fail) and
    // ssfc nmse; then the decoupled reference (lsfc nmse, fail, ssfc nmse).
    const int per_iter = 3;
    const int per_variant = (n_iters + 1) * per_iter;
    const int n_slots = 2 * per_variant + 3;

    auto trial_fn = [&](int trial) -> TrialSlots {
        TrialSlots slots(n_slots, {0.0, 0.0});
        const SystemDims dims(m, n_users, cfg.pilot_len, 1);
        RngStream geo_rng(cfg.seed, static_cast<std::uint64_t>(trial) + 1, tag::geometry);
        const LargeScaleRealization lsfc = gen_lsfc(dims, params, geo_rng);
        const PilotMatrix pilots =
            orthogonal_pilots(n_users, cfg.pilot_len, power_for_target_snr(lsfc.beta, snr));

        RngStream ch_rng(cfg.seed, static_cast<std::uint64_t>(trial) + 1, tag::channel);
        const MatrixXcd g =
            draw_gaussians(static_cast<int>(factors.front().cols()), n_users, ch_rng);
        const MatrixXcd h = apply_factors(factors, g);
        RngStream noise_rng(cfg.seed, static_cast<std::uint64_t>(trial) + 1, tag::noise);
        ReceivedBlock block;
        block.y.noalias() = h * lsfc.beta.cwiseSqrt().asDiagonal() * pilots.rows();
        block.y += draw_gaussians(m, cfg.pilot_len, noise_rng);

        const auto add_lsfc = [&](int slot, const VectorXd& beta_hat) {
            for (int k = 0; k < n_users; ++k) {
                if (beta_hat[k] > 0.0) {
                    const double err_db = 10.0 * std::log10(beta_hat[k] / lsfc.beta[k]);
                    slots[slot].first += err_db * err_db / db_var;
                    slots[slot].second += 1.0;
                } else {
                    slots[slot + 1].first += 1.0;
                }
                slots[slot + 1].second += 1.0;
            }
        };
        const auto add_ssfc = [&](int slot, const MatrixXcd& h_hat) {
            for (int k = 0; k < n_users; ++k) {
                slots[slot].first += (h_hat.col(k) - h.col(k)).squaredNorm() / m;
                slots[slot].second += 1.0;
            }
        };

        for (int vi = 0; vi < 2; ++vi) {
            const EmVariant variant = vi == 0 ? EmVariant::em : EmVariant::mem;
            // tol 0 disables early convergence exit so every iteration row
            // has the same trial count.
            const EmResult result = em_joint(block, pilots, cache, prior, n_iters, variant, 0.0);
            for (int it = 0; it <= n_iters; ++it) {
                const EmIterate& state =
                    result.trace[std::min<std::size_t>(it, result.trace.size() - 1)];
                const VectorXd beta_hat = state.sqrt_beta_hat.array().square();
                const int slot = vi * per_variant + it * per_iter;
                add_lsfc(slot, beta_hat);
                if (state.h_hat.size() > 0)
                    add_ssfc(slot + 2, state.h_hat);
            }
        }

        const LsfcEstimate decoupled = estimate_lsfc(block, pilots);
        add_lsfc(2 * per_variant, decoupled.beta_hat);
        for (int k = 0; k < n_users; ++k) {
            if (decoupled.beta_hat[k] <= 0.0)
                continue;
            const double gamma = std::sqrt(decoupled.beta_hat[k]) * pilots.energy(k);
            const SsfcEstimate est = conventional_ls(block, pilots, k, gamma);
            slots[2 * per_variant + 2].first += (est.h_hat - h.col(k)).squaredNorm() / m;
            slots[2 * per_variant + 2].second += 1.0;
        }
        return slots;
    };

    const std::vector<BatchReducer> reducers =
        run_slotted(cfg.n_trials, cfg.workers, n_slots, trial_fn);

    std::vector<ResultRow> rows;
    for (int vi = 0; vi < 2; ++vi) {
        const std::string variant = vi == 0 ? "em" : "mem";
        for (int it = 0; it <= n_iters; ++it) {
            const int slot = vi * per_variant + it * per_iter;
            Keys keys;
            keys.set("variant", variant).set("iteration", it);
            rows.push_back(make_row(cfg, keys, "nmse_lsfc_db", reducers[slot]));
            rows.push_back(make_row(cfg, keys, "failure_rate", reducers[slot + 1]));
            if (!reducers[slot + 2].empty())
                rows.push_back(make_row(cfg, keys, "nmse_ssfc", reducers[slot + 2]));
        }
    }
    Keys keys;
    keys.set("variant", "decoupled").set("iteration", 0);
    rows.push_back(make_row(cfg, keys, "nmse_lsfc_db", reducers[2 * per_variant]));
    rows.push_back(make_row(cfg, keys, "failure_rate", reducers[2 * per_variant + 1]));
    rows.push_back(make_row(cfg, keys, "nmse_ssfc", reducers[2 * per_variant + 2]));
    return rows;
}

// --------------------------------------------------------------------------
// Scenario: rank-reduced SSFC estimation versus SNR and modeling order
// --------------------------------------------------------------------------

// Line search over every configured order at once: the coarse stage projects
// onto the largest order and reads smaller ones off prefix norms.
std::vector<double> aoa_search_multi(const VectorXcd& matched, const RrBasis& parent,
                                     const std::vector<int>& orders, double spacing) {
    const int m_dim = parent.dim();
    const int m_max = *std::max_element(orders.begin(), orders.end());
    const AoaSearchGrid grid;

    const int n = grid.n_grid;
    MatrixXcd aligned(m_dim, n);
    for (int i = 0; i < n; ++i) {
        const double angle = -M_PI / 2.0 + M_PI * i / (n - 1.0);
        const double step = 2.0 * M_PI * spacing * std::sin(angle);
        for (int r = 0; r < m_dim; ++r)
            aligned(r, i) = std::polar(1.0, step * r) * matched[r];
    }
    const MatrixXcd coeffs = parent.parent().leftCols(m_max).adjoint() * aligned;

    std::vector<double> result;
    result.reserve(orders.size());
    for (int order : orders) {
        int best = 0;
        double best_value = -1.0;
        for (int i = 0; i < n; ++i) {
            const double value = coeffs.col(i).head(order).squaredNorm();
            if (value > best_value) {
                best_value = value;
                best = i;
            }
        }
        const double coarse_step = M_PI / (n - 1.0);
        const double center = -M_PI / 2.0 + coarse_step * best;
        const RrBasis basis = parent.with_order(order);
        const double lo = std::max(-M_PI / 2.0, center - coarse_step);
        const double hi = std::min(M_PI / 2.0, center + coarse_step);

        // Local densify + golden section, same policy as aoa_line_search_from.
        constexpr int kDense = 33;
        double dense_best = center;
        double dense_value = best_value;
        int dense_index = -1;
        for (int i = 0; i < kDense; ++i) {
            const double angle = lo + (hi - lo) * i / (kDense - 1.0);
            const double value = aoa_objective(matched, basis, spacing, angle);
            if (value > dense_value) {
                dense_value = value;
                dense_best = angle;
                dense_index = i;
            }
        }
        double a = lo, b = hi;
        if (dense_index >= 0) {
            const double dense_step = (hi - lo) / (kDense - 1.0);
            a = std::max(lo, dense_best - dense_step);
            b = std::min(hi, dense_best + dense_step);
        }
        constexpr double kInvPhi = 0.6180339887498949;
        double x1 = b - kInvPhi * (b - a);
        double x2 = a + kInvPhi * (b - a);
        double f1 = aoa_objective(matched, basis, spacing, x1);
        double f2 = aoa_objective(matched, basis, spacing, x2);
        for (int it = 0; it < grid.refine_iters; ++it) {
            if (f1 < f2) {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + kInvPhi * (b - a);
                f2 = aoa_objective(matched, basis, spacing, x2);
            } else {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - kInvPhi * (b - a);
                f1 = aoa_objective(matched, basis, spacing, x1);
            }
        }
        const double mid = 0.5 * (a + b);
        result.push_back(aoa_objective(matched, basis, spacing, mid) >= dense_value
                             ? mid
                             : dense_best);
    }
    return result;
}

std::vector<ResultRow> run_ssfc_vs_snr_order(const ExperimentConfig& cfg) {
    const int m = cfg.n_antennas;
    const int n_users = cfg.n_users;
    const LargeScaleParams params = large_scale_params(cfg);
    const int max_j = *std::max_element(cfg.j_blocks.begin(), cfg.j_blocks.end());
    const int n_modes = 1 + static_cast<int>(cfg.j_blocks.size()); // known + each J
    const int n_snr = static_cast<int>(cfg.snr_db.size());
    const int n_orders = static_cast<int>(cfg.modeling_orders.size());
    const int n_bases = static_cast<int>(cfg.bases.size());

    // Directions fixed across trials so theory rows refer to the same
    // correlations the sampler uses.
    const VectorXd aoas = draw_aoas(cfg, 0, tag::aoa);
    std::vector<CorrelationMatrix> correlations;
    std::vector<MatrixXcd> factors;
    std::vector<SteeringDiagonal> alignments;
    for (int k = 0; k < n_users; ++k) {
        const SpatialProfile profile = profile_for(cfg, aoas[k], cfg.spacing_wl);
        correlations.push_back(correlation_from_profile(m, profile));
        factors.push_back(cfg.pas == PasKind::scm_subpaths
                              ? scm_subpath_factor(m, profile)
                              : correlations.back().sqrt());
        alignments.push_back(steering_diag(m, aoas[k], cfg.spacing_wl));
    }

    std::vector<RrBasis> parents;
    for (BasisKind kind : cfg.bases)
        parents.push_back(kind == BasisKind::polynomial ? polynomial_basis(m, m)
                                                        : dct2_basis(m, m));

    // slot = (((snr * n_bases + basis) * n_orders + order) * n_modes + mode)
    //   x2: nmse then failure.
    const int n_slots = n_snr * n_bases * n_orders * n_modes * 2;
    auto slot_of = [&](int snr, int basis, int order, int mode) {
        return (((snr * n_bases + basis) * n_orders + order) * n_modes + mode) * 2;
    };

    auto trial_fn = [&](int trial) -> TrialSlots {
        TrialSlots slots(n_slots, {0.0, 0.0});
        const SystemDims dims(m, n_users, cfg.pilot_len, max_j);
        RngStream geo_rng(cfg.seed, static_cast<std::uint64_t>(trial) + 1, tag::geometry);
        const LargeScaleRealization lsfc = gen_lsfc(dims, params, geo_rng);

        // Fading and noise are reused across the SNR sweep; only pilot power
        // changes.
        std::vector<MatrixXcd> h_blocks, n_blocks_noise;
        for (int j = 0; j < max_j; ++j) {
            RngStream ch_rng(cfg.seed, static_cast<std::uint64_t>(trial) + 1,
                             tag::channel + static_cast<std::uint64_t>(j));
            const MatrixXcd g =
                draw_gaussians(static_cast<int>(factors.front().cols()), n_users, ch_rng);
            h_blocks.push_back(apply_factors(factors, g));
            RngStream noise_rng(cfg.seed, static_cast<std::uint64_t>(trial) + 1,
                                tag::noise + static_cast<std::uint64_t>(j));
            n_blocks_noise.push_back(draw_gaussians(m, cfg.pilot_len, noise_rng));
        }

        for (int si = 0; si < n_snr; ++si) {
            const double snr = std::pow(10.0, cfg.snr_db[si] / 10.0);
            const PilotMatrix pilots = orthogonal_pilots(
                n_users, cfg.pilot_len, power_for_target_snr(lsfc.beta, snr));
            std::vector<ReceivedBlock> blocks(max_j);
            for (int j = 0; j < max_j; ++j) {
                blocks[j].y.noalias() =
                    h_blocks[j] * lsfc.beta.cwiseSqrt().asDiagonal() * pilots.rows();
                blocks[j].y += n_blocks_noise[j];
            }

            // Gains per mode: exact, then from each J-block estimate.
            std::vector<VectorXd> gains(n_modes);
            std::vector<std::vector<bool>> usable(n_modes,
                                                  std::vector<bool>(n_users, true));
            gains[0] = lsfc.beta;
            for (std::size_t ji = 0; ji < cfg.j_blocks.size(); ++ji) {
                const std::vector<ReceivedBlock> subset(blocks.begin(),
                                                        blocks.begin() + cfg.j_blocks[ji]);
                const LsfcEstimate est = estimate_lsfc_multi(subset, pilots);
                gains[1 + ji] = est.beta_hat;
                for (int k = 0; k < n_users; ++k)
                    usable[1 + ji][k] = est.beta_hat[k] > 0.0;
            }

            for (int k = 0; k < n_users; ++k) {
                const VectorXcd matched = pilot_matched_output(blocks.front(), pilots, k);
                for (int bi = 0; bi < n_bases; ++bi) {
                    const std::vector<double> found_aoas = aoa_search_multi(
                        matched, parents[bi], cfg.modeling_orders, cfg.spacing_wl);
                    for (int oi = 0; oi < n_orders; ++oi) {
                        const RrBasis basis =
                            parents[bi].with_order(cfg.modeling_orders[oi]);
                        for (int mode = 0; mode < n_modes; ++mode) {
                            const int slot = slot_of(si, bi, oi, mode);
                            if (!usable[mode][k]) {
                                slots[slot + 1].first += 1.0;
                                slots[slot + 1].second += 1.0;
                                continue;
                            }
                            const double gamma =
                                std::sqrt(gains[mode][k]) * pilots.energy(k);
                            const SsfcEstimate est = estimate_ssfc_aligned_from(
                                matched, gamma, basis, found_aoas[oi], cfg.spacing_wl);
                            slots[slot].first +=
                                (est.h_hat - h_blocks.front().col(k)).squaredNorm() / m;
                            slots[slot].second += 1.0;
                            slots[slot + 1].second += 1.0;
                        }
                    }
                }
            }
        }
        return slots;
    };

    const std::vector<BatchReducer> reducers =
        run_slotted(cfg.n_trials, cfg.workers, n_slots, trial_fn);

    std::vector<ResultRow> rows;
    auto mode_name = [&](int mode) {
        return mode == 0 ? std::string("known")
                         : "j" + std::to_string(cfg.j_blocks[mode - 1]);
    };
    for (int si = 0; si < n_snr; ++si)
        for (int bi = 0; bi < n_bases; ++bi)
            for (int oi = 0; oi < n_orders; ++oi) {
                for (int mode = 0; mode < n_modes; ++mode) {
                    Keys keys;
                    keys.set("snr_db", cfg.snr_db[si])
                        .set("basis", basis_kind_name(cfg.bases[bi]))
                        .set("order", cfg.modeling_orders[oi])
                        .set("lsfc", mode_name(mode));
                    const int slot = slot_of(si, bi, oi, mode);
                    rows.push_back(make_row(cfg, keys, "nmse_ssfc", reducers[slot]));
                    rows.push_back(make_row(cfg, keys, "failure_rate", reducers[slot + 1]));
                }
                // Closed-form prediction with exact gains and alignment.
                double theory = 0.0;
                const double pilot_energy =
                    cfg.pilot_len * std::pow(10.0, cfg.snr_db[si] / 10.0);
                for (int k = 0; k < n_users; ++k) {
                    // Power control holds beta * energy at T * snr.
                    const TheoryMse t = theoretical_mse(
                        cfg.modeling_orders[oi], 1.0, pilot_energy,
                        parents[bi], correlations[k], &alignments[k]);
                    theory += t.total / m;
                }
                theory /= n_users;
                Keys keys;
                keys.set("snr_db", cfg.snr_db[si])
                    .set("basis", basis_kind_name(cfg.bases[bi]))
                    .set("order", cfg.modeling_orders[oi])
                    .set("lsfc", "known");
                rows.push_back(make_value_row(cfg, keys, "nmse_ssfc_theory", theory));
            }
    return rows;
}

// --------------------------------------------------------------------------
// Scenario: closed-form MSE surface over order and SNR
// --------------------------------------------------------------------------

std::vector<ResultRow> run_theory_surface(const ExperimentConfig& cfg) {
    const int m = cfg.n_antennas;
    const double aoa = cfg.mean_aoa_deg * kDegToRad;
    const SpatialProfile profile = profile_for(cfg, aoa, cfg.spacing_wl);
    const CorrelationMatrix phi = correlation_from_profile(m, profile);
    const SteeringDiagonal alignment = steering_diag(m, aoa, cfg.spacing_wl);

    std::vector<ResultRow> rows;
    for (BasisKind kind : cfg.bases) {
        const RrBasis parent = kind == BasisKind::polynomial
                                   ? polynomial_basis(m, m)
                                   : (kind == BasisKind::dct2
                                          ? dct2_basis(m, m)
                                          : klt_basis(phi, &alignment, m));
        for (int aligned = 0; aligned < 2; ++aligned) {
            const std::vector<double> bias =
                bias_by_order(parent, phi, aligned ? &alignment : nullptr);
            for (double snr_db : cfg.snr_db) {
                const double pilot_energy = cfg.pilot_len * std::pow(10.0, snr_db / 10.0);
                for (int order = 1; order <= m; ++order) {
                    Keys keys;
                    keys.set("snr_db", snr_db)
                        .set("basis", basis_kind_name(kind))
                        .set("estimator", aligned ? "aligned" : "basis")
                        .set("order", order);
                    const double variance = theoretical_variance(order, 1.0, pilot_energy);
                    rows.push_back(make_value_row(cfg, keys, "nmse_theory_total",
                                                  (variance + bias[order]) / m));
                    rows.push_back(
                        make_value_row(cfg, keys, "nmse_theory_variance", variance / m));
                    rows.push_back(
                        make_value_row(cfg, keys, "nmse_theory_bias", bias[order] / m));
                }
            }
        }
    }
    return rows;
}

} // namespace

std::vector<ResultRow> run_experiment(const ExperimentConfig& config) {
    validate(config);
    switch (config.scenario) {
    case Scenario::lsfc_vs_spacing: return run_lsfc_sweep(config, false);
    case Scenario::lsfc_vs_m: return run_lsfc_sweep(config, true);
    case Scenario::em_vs_proposed: return run_em_vs_proposed(config);
    case Scenario::ssfc_vs_snr_order: return run_ssfc_vs_snr_order(config);
    case Scenario::theory_mse_surface: return run_theory_surface(config);
    }
    throw config_error("unhandled scenario");
}

} // namespace chanest
