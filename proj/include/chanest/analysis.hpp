// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "chanest/channel_model.hpp"
#include "chanest/rr_basis.hpp"

namespace chanest {

// Closed-form error budget of a rank-reduced fading estimate.
struct TheoryMse {
    double variance = 0.0; // order / (beta ||p||^2)
    double bias = 0.0;     // energy outside the retained subspace
    double total = 0.0;
    Eigen::VectorXd discarded_mask; // 0 on retained columns, 1 on discarded ones
};

// Estimation variance m / (beta ||p||^2); identical for the basis and the
// aligned estimator.
double theoretical_variance(int order, double beta, double pilot_energy);

// Energy of the (aligned) correlation along each parent column:
// g_j = q_j^H W^H Phi W q_j, with the alignment omitted when null.
Eigen::VectorXd aligned_energy_profile(const RrBasis& basis, const CorrelationMatrix& phi,
                                       const SteeringDiagonal* alignment);

// Bias term: correlation energy over the discarded columns.
double theoretical_bias(const RrBasis& basis, const CorrelationMatrix& phi,
                        const SteeringDiagonal* alignment);

// Bias as a function of the modeling order for one parent basis;
// entry [m] is the bias at order m, m = 0..M.
std::vector<double> bias_by_order(const RrBasis& basis, const CorrelationMatrix& phi,
                                  const SteeringDiagonal* alignment);

TheoryMse theoretical_mse(int order, double beta, double pilot_energy, const RrBasis& basis,
                          const CorrelationMatrix& phi, const SteeringDiagonal* alignment);

// Analytic variance of the large-scale gain in dB: shadowing plus the
// pathloss contribution under the area-uniform annulus placement. Used as the
// denominator of the dB-domain NMSE.
double lsfc_db_variance(const LargeScaleParams& params);

// Aggregated error metrics over a sample of trials.
struct NmseReport {
    double nmse_ssfc = 0.0;    // mean squared error / (dimension x unit entry variance)
    double nmse_lsfc_db = 0.0; // E{(10 log10(beta_hat/beta))^2} / Var{10 log10 beta}
    double failure_rate = 0.0; // fraction of non-positive gain estimates
};

struct SampleSet {
    std::vector<double> beta_hat;
    std::vector<double> beta_true;
    std::vector<double> ssfc_err_sq; // per-sample squared error norms
    int ssfc_dim = 0;
};

NmseReport nmse_metrics(const SampleSet& samples, double lsfc_db_var);

// Least-squares slope of log(y) against log(x); the convergence-rate checks
// compare it against the expected -1/2 scaling.
double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

} // namespace chanest
