// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

namespace chanest {

struct LargeScaleRealization;

// Orthogonal training sequences, one row per user (stored as p_k^H).
class PilotMatrix {
public:
    PilotMatrix(Eigen::MatrixXcd rows, Eigen::VectorXd energy);

    const Eigen::MatrixXcd& rows() const { return rows_; }
    // Pilot column vector p_k, i.e. the conjugate of row k.
    Eigen::VectorXcd user_pilot(int user) const;
    // Training energy per user, squared norm of p_k.
    double energy(int user) const { return energy_[user]; }
    const Eigen::VectorXd& energies() const { return energy_; }
    int n_users() const { return static_cast<int>(rows_.rows()); }
    int pilot_len() const { return static_cast<int>(rows_.cols()); }

private:
    Eigen::MatrixXcd rows_;  // K x T
    Eigen::VectorXd energy_; // K
};

// First n_users rows of a scaled T-point DFT; works for any pilot_len >= n_users.
PilotMatrix orthogonal_pilots(int n_users, int pilot_len, double per_symbol_power);

// Per-user power override for SNR-normalized sweeps.
PilotMatrix orthogonal_pilots(int n_users, int pilot_len,
                              const Eigen::VectorXd& per_symbol_power);

// Average received SNR per user: beta_k ||p_k||^2 / T.
struct SnrSpec {
    Eigen::VectorXd snr; // linear
};

SnrSpec snr_for(const LargeScaleRealization& lsfc, const PilotMatrix& pilots);

// Per-symbol pilot power that puts a link of gain beta at the target SNR.
double power_for_target_snr(double beta, double snr_linear);
Eigen::VectorXd power_for_target_snr(const Eigen::VectorXd& beta, double snr_linear);

} // namespace chanest
