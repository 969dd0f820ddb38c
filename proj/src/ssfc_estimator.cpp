// SPDX-License-Identifier: Apache-2.0
#include "chanest/ssfc_estimator.hpp"

#include <cmath>
#include <stdexcept>

namespace chanest {

using Eigen::VectorXcd;

void AoaSearchGrid::validate() const {
    if (n_grid < 16)
        throw std::invalid_argument("AoA grid needs at least 16 points");
    if (refine_iters < 0)
        throw std::invalid_argument("refinement count cannot be negative");
}

Eigen::VectorXcd pilot_matched_output(const ReceivedBlock& block, const PilotMatrix& pilots,
                                      int user) {
    if (block.y.cols() != pilots.pilot_len())
        throw std::invalid_argument("received block and pilots disagree on the pilot length");
    return block.y * pilots.user_pilot(user);
}

namespace {

void check_gamma(double gamma) {
    if (!(gamma > 0.0))
        throw std::invalid_argument("gamma must be positive");
}

VectorXcd align(const VectorXcd& matched, double spacing, double angle) {
    // W^H(angle) v: conj of the steering ramp applied entrywise.
    const int m = static_cast<int>(matched.size());
    VectorXcd out(m);
    const double step = 2.0 * M_PI * spacing * std::sin(angle);
    for (int i = 0; i < m; ++i)
        out[i] = std::polar(1.0, step * i) * matched[i];
    return out;
}

} // namespace

SsfcEstimate conventional_ls_from(const Eigen::VectorXcd& matched, double gamma) {
    check_gamma(gamma);
    SsfcEstimate est;
    est.gamma = gamma;
    est.h_hat = matched / gamma;
    est.c_hat = est.h_hat;
    return est;
}

SsfcEstimate conventional_ls(const ReceivedBlock& block, const PilotMatrix& pilots, int user,
                             double gamma) {
    return conventional_ls_from(pilot_matched_output(block, pilots, user), gamma);
}

SsfcEstimate estimate_ssfc_basis_from(const Eigen::VectorXcd& matched, double gamma,
                                      const RrBasis& basis) {
    check_gamma(gamma);
    if (basis.dim() != matched.size())
        throw std::invalid_argument("basis and observation disagree on dimensions");
    SsfcEstimate est;
    est.gamma = gamma;
    est.c_hat = basis.retained().adjoint() * matched / gamma;
    est.h_hat = basis.retained() * est.c_hat;
    return est;
}

SsfcEstimate estimate_ssfc_basis(const ReceivedBlock& block, const PilotMatrix& pilots,
                                 int user, double gamma, const RrBasis& basis) {
    return estimate_ssfc_basis_from(pilot_matched_output(block, pilots, user), gamma, basis);
}

double aoa_objective(const Eigen::VectorXcd& matched, const RrBasis& basis,
                     double spacing_wavelengths, double angle_rad) {
    return (basis.retained().adjoint() * align(matched, spacing_wavelengths, angle_rad))
        .squaredNorm();
}

double aoa_line_search_from(const Eigen::VectorXcd& matched, const RrBasis& basis,
                            double spacing_wavelengths, const AoaSearchGrid& grid) {
    grid.validate();
    const auto objective = [&](double angle) {
        return aoa_objective(matched, basis, spacing_wavelengths, angle);
    };

    // Coarse pass.
    const int n = grid.n_grid;
    double best_angle = -M_PI / 2.0;
    double best_value = -1.0;
    for (int i = 0; i < n; ++i) {
        const double angle = -M_PI / 2.0 + M_PI * i / (n - 1.0);
        const double value = objective(angle);
        if (value > best_value) {
            best_value = value;
            best_angle = angle;
        }
    }
    if (grid.refine_iters == 0)
        return best_angle;

    const double coarse_step = M_PI / (n - 1.0);
    double lo = std::max(-M_PI / 2.0, best_angle - coarse_step);
    double hi = std::min(M_PI / 2.0, best_angle + coarse_step);

    // The objective ripples at the scale of a beamwidth, which can be finer
    // than the coarse grid for large arrays. Densify the winning cell before
    // golden-section so the final bracket is unimodal.
    constexpr int kDenseCount = 33;
    double dense_best = best_angle;
    double dense_value = best_value;
    int dense_index = -1;
    for (int i = 0; i < kDenseCount; ++i) {
        const double angle = lo + (hi - lo) * i / (kDenseCount - 1.0);
        const double value = objective(angle);
        if (value > dense_value) {
            dense_value = value;
            dense_best = angle;
            dense_index = i;
        }
    }
    if (dense_index >= 0) {
        const double dense_step = (hi - lo) / (kDenseCount - 1.0);
        lo = std::max(lo, dense_best - dense_step);
        hi = std::min(hi, dense_best + dense_step);
    }

    // Golden-section maximization on the final bracket.
    constexpr double kInvPhi = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - kInvPhi * (b - a);
    double x2 = a + kInvPhi * (b - a);
    double f1 = objective(x1);
    double f2 = objective(x2);
    for (int it = 0; it < grid.refine_iters; ++it) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + kInvPhi * (b - a);
            f2 = objective(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - kInvPhi * (b - a);
            f1 = objective(x1);
        }
    }
    const double mid = 0.5 * (a + b);
    return objective(mid) >= dense_value ? mid : dense_best;
}

double aoa_line_search(const ReceivedBlock& block, const PilotMatrix& pilots, int user,
                       const RrBasis& basis, double spacing_wavelengths,
                       const AoaSearchGrid& grid) {
    return aoa_line_search_from(pilot_matched_output(block, pilots, user), basis,
                                spacing_wavelengths, grid);
}

SsfcEstimate estimate_ssfc_aligned_from(const Eigen::VectorXcd& matched, double gamma,
                                        const RrBasis& basis, double mean_aoa_rad,
                                        double spacing_wavelengths) {
    check_gamma(gamma);
    if (basis.dim() != matched.size())
        throw std::invalid_argument("basis and observation disagree on dimensions");
    SsfcEstimate est;
    est.gamma = gamma;
    est.mean_aoa = mean_aoa_rad;
    est.c_hat =
        basis.retained().adjoint() * align(matched, spacing_wavelengths, mean_aoa_rad) / gamma;
    VectorXcd projected = basis.retained() * est.c_hat;
    const double step = -2.0 * M_PI * spacing_wavelengths * std::sin(mean_aoa_rad);
    est.h_hat.resize(projected.size());
    for (int i = 0; i < projected.size(); ++i)
        est.h_hat[i] = std::polar(1.0, step * i) * projected[i];
    return est;
}

SsfcEstimate estimate_ssfc_aligned(const ReceivedBlock& block, const PilotMatrix& pilots,
                                   int user, double gamma, const RrBasis& basis,
                                   double mean_aoa_rad, double spacing_wavelengths) {
    return estimate_ssfc_aligned_from(pilot_matched_output(block, pilots, user), gamma, basis,
                                      mean_aoa_rad, spacing_wavelengths);
}

} // namespace chanest
