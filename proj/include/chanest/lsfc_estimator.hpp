// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "chanest/channel_model.hpp"
#include "chanest/pilots.hpp"

namespace chanest {

// Large-scale gain estimate from pilot blocks alone; entries can come out
// negative in finite samples and are reported as-is.
struct LsfcEstimate {
    Eigen::VectorXd beta_hat;
    int blocks_used = 1;
};

// Decoupled estimator: beta_k = (p_k^H Y^H Y p_k - M ||p_k||^2) / (M ||p_k||^4).
// Assumes the observation noise has unit variance per entry; rescale raw
// inputs with scale_to_unit_noise first if it does not.
LsfcEstimate estimate_lsfc(const ReceivedBlock& block, const PilotMatrix& pilots);

// Multi-block form: the single-block formula applied to the Gram matrix
// averaged over blocks.
LsfcEstimate estimate_lsfc_multi(const std::vector<ReceivedBlock>& blocks,
                                 const PilotMatrix& pilots);

// Literal matrix form of the same estimator, built from the Kronecker/Hadamard
// pilot structure. Kept as an independent algebraic route for verification;
// agrees with estimate_lsfc to machine precision.
Eigen::VectorXd estimate_lsfc_matrix_form(const std::vector<ReceivedBlock>& blocks,
                                          const PilotMatrix& pilots);

// Rescales an observation with per-entry noise variance noise_power so the
// unit-variance assumption of the estimators holds. Estimates obtained from
// the result refer to beta / noise_power.
ReceivedBlock scale_to_unit_noise(const ReceivedBlock& block, double noise_power);

// Simulation-only split of the estimation error into its three sources:
// noise quadratic, channel hardening deficit, and the signal-noise cross term.
// The three terms add up exactly to beta_hat_k - beta_k.
struct LsfcErrorTerms {
    double noise_quadratic; // r1
    double hardening;       // r2
    double cross;           // r3
    double sum() const { return noise_quadratic + hardening + cross; }
};

LsfcErrorTerms lsfc_error_decomposition(const Eigen::VectorXcd& h_user, double beta_user,
                                        const Eigen::MatrixXcd& noise,
                                        const PilotMatrix& pilots, int user);

} // namespace chanest
