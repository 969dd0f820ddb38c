// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <optional>

#include "chanest/channel_model.hpp"
#include "chanest/pilots.hpp"
#include "chanest/rr_basis.hpp"

namespace chanest {

// One user's fast-fading estimate. For the basis estimator h_hat = Q c_hat,
// for the aligned estimator h_hat = W(mean_aoa) Q c_hat.
struct SsfcEstimate {
    Eigen::VectorXcd h_hat;
    Eigen::VectorXcd c_hat;
    std::optional<double> mean_aoa; // aligned estimator only
    double gamma = 0.0;             // sqrt(beta) ||p||^2 actually used
};

// Line-search resolution: coarse grid over [-pi/2, pi/2] followed by local
// densification and golden-section refinement inside the winning cell.
struct AoaSearchGrid {
    int n_grid = 181;
    int refine_iters = 40;

    void validate() const;
};

// Matched-filter statistic Y p_k the estimators operate on.
Eigen::VectorXcd pilot_matched_output(const ReceivedBlock& block, const PilotMatrix& pilots,
                                      int user);

// Unbiased full-order LS: h_hat = Y p / gamma.
SsfcEstimate conventional_ls(const ReceivedBlock& block, const PilotMatrix& pilots, int user,
                             double gamma);
SsfcEstimate conventional_ls_from(const Eigen::VectorXcd& matched, double gamma);

// Rank-reduced estimator on a fixed basis: c_hat = Q^H Y p / gamma.
SsfcEstimate estimate_ssfc_basis(const ReceivedBlock& block, const PilotMatrix& pilots,
                                 int user, double gamma, const RrBasis& basis);
SsfcEstimate estimate_ssfc_basis_from(const Eigen::VectorXcd& matched, double gamma,
                                      const RrBasis& basis);

// Mean-AoA objective ||Q^H W^H(angle) Y p||^2 (no matrix inversion involved).
double aoa_objective(const Eigen::VectorXcd& matched, const RrBasis& basis,
                     double spacing_wavelengths, double angle_rad);

// Grid-plus-refinement maximizer of the objective over [-pi/2, pi/2].
double aoa_line_search(const ReceivedBlock& block, const PilotMatrix& pilots, int user,
                       const RrBasis& basis, double spacing_wavelengths,
                       const AoaSearchGrid& grid = {});
double aoa_line_search_from(const Eigen::VectorXcd& matched, const RrBasis& basis,
                            double spacing_wavelengths, const AoaSearchGrid& grid = {});

// Aligned rank-reduced estimator: c_hat = Q^H W^H(mean_aoa) Y p / gamma,
// h_hat = W(mean_aoa) Q c_hat.
SsfcEstimate estimate_ssfc_aligned(const ReceivedBlock& block, const PilotMatrix& pilots,
                                   int user, double gamma, const RrBasis& basis,
                                   double mean_aoa_rad, double spacing_wavelengths);
SsfcEstimate estimate_ssfc_aligned_from(const Eigen::VectorXcd& matched, double gamma,
                                        const RrBasis& basis, double mean_aoa_rad,
                                        double spacing_wavelengths);

} // namespace chanest
