// SPDX-License-Identifier: Apache-2.0
#include "chanest/pilots.hpp"

#include <cmath>
#include <stdexcept>

#include "chanest/channel_model.hpp"

namespace chanest {

PilotMatrix::PilotMatrix(Eigen::MatrixXcd rows, Eigen::VectorXd energy)
    : rows_(std::move(rows)), energy_(std::move(energy)) {
    if (rows_.rows() > rows_.cols())
        throw std::invalid_argument("pilot length must be at least the user count");
    if (energy_.size() != rows_.rows())
        throw std::invalid_argument("one energy entry per user is required");
    for (int k = 0; k < energy_.size(); ++k)
        if (!(energy_[k] > 0.0))
            throw std::invalid_argument("pilot energies must be positive");
}

Eigen::VectorXcd PilotMatrix::user_pilot(int user) const {
    return rows_.row(user).adjoint();
}

PilotMatrix orthogonal_pilots(int n_users, int pilot_len, double per_symbol_power) {
    return orthogonal_pilots(n_users, pilot_len,
                             Eigen::VectorXd::Constant(n_users, per_symbol_power));
}

PilotMatrix orthogonal_pilots(int n_users, int pilot_len,
                              const Eigen::VectorXd& per_symbol_power) {
    if (n_users < 1 || pilot_len < n_users)
        throw std::invalid_argument("invalid pilots: need pilot_len >= n_users >= 1");
    if (per_symbol_power.size() != n_users)
        throw std::invalid_argument("invalid pilots: one power entry per user is required");

    Eigen::MatrixXcd rows(n_users, pilot_len);
    Eigen::VectorXd energy(n_users);
    for (int k = 0; k < n_users; ++k) {
        if (!(per_symbol_power[k] > 0.0))
            throw std::invalid_argument("invalid pilots: per-symbol power must be positive");
        const double amp = std::sqrt(per_symbol_power[k]);
        for (int t = 0; t < pilot_len; ++t)
            rows(k, t) = amp * std::polar(1.0, -2.0 * M_PI * k * t / pilot_len);
        energy[k] = per_symbol_power[k] * pilot_len;
    }
    return PilotMatrix(std::move(rows), std::move(energy));
}

SnrSpec snr_for(const LargeScaleRealization& lsfc, const PilotMatrix& pilots) {
    if (lsfc.beta.size() != pilots.n_users())
        throw std::invalid_argument("gain vector and pilots disagree on the user count");
    SnrSpec spec;
    spec.snr = lsfc.beta.cwiseProduct(pilots.energies()) / pilots.pilot_len();
    return spec;
}

double power_for_target_snr(double beta, double snr_linear) {
    return snr_linear / beta;
}

Eigen::VectorXd power_for_target_snr(const Eigen::VectorXd& beta, double snr_linear) {
    return snr_linear * beta.cwiseInverse();
}

} // namespace chanest
