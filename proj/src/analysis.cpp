// SPDX-License-Identifier: Apache-2.0
#include "chanest/analysis.hpp"

#include <cmath>
#include <stdexcept>

namespace chanest {

using Eigen::MatrixXcd;
using Eigen::VectorXd;

double theoretical_variance(int order, double beta, double pilot_energy) {
    if (order < 1 || !(beta > 0.0) || !(pilot_energy > 0.0))
        throw std::invalid_argument("variance formula needs positive order, gain and energy");
    return order / (beta * pilot_energy);
}

Eigen::VectorXd aligned_energy_profile(const RrBasis& basis, const CorrelationMatrix& phi,
                                       const SteeringDiagonal* alignment) {
    const int m = basis.dim();
    if (phi.dim() != m)
        throw std::invalid_argument("basis and correlation disagree on dimensions");
    MatrixXcd target = phi.phi();
    if (alignment != nullptr) {
        if (alignment->entries.size() != m)
            throw std::invalid_argument("alignment and correlation disagree on dimensions");
        target = alignment->entries.conjugate().asDiagonal() * target;
        target = target * alignment->entries.asDiagonal();
    }
    const MatrixXcd projected = basis.parent().adjoint() * target * basis.parent();
    return projected.diagonal().real().cwiseMax(0.0);
}

double theoretical_bias(const RrBasis& basis, const CorrelationMatrix& phi,
                        const SteeringDiagonal* alignment) {
    const VectorXd profile = aligned_energy_profile(basis, phi, alignment);
    return profile.tail(basis.dim() - basis.order()).sum();
}

std::vector<double> bias_by_order(const RrBasis& basis, const CorrelationMatrix& phi,
                                  const SteeringDiagonal* alignment) {
    const VectorXd profile = aligned_energy_profile(basis, phi, alignment);
    const int m = basis.dim();
    std::vector<double> bias(m + 1, 0.0);
    for (int order = m - 1; order >= 0; --order)
        bias[order] = bias[order + 1] + profile[order];
    return bias;
}

TheoryMse theoretical_mse(int order, double beta, double pilot_energy, const RrBasis& basis,
                          const CorrelationMatrix& phi, const SteeringDiagonal* alignment) {
    TheoryMse out;
    out.variance = theoretical_variance(order, beta, pilot_energy);
    out.bias = theoretical_bias(basis.with_order(order), phi, alignment);
    out.total = out.variance + out.bias;
    out.discarded_mask = VectorXd::Zero(basis.dim());
    out.discarded_mask.tail(basis.dim() - order).setOnes();
    return out;
}

double lsfc_db_variance(const LargeScaleParams& params) {
    // 10 log10(beta) = shadow_db - 10 alpha log10(d); the two parts are
    // independent. Moments of ln(d) under the annulus density 2d/(R^2-r^2).
    const double r = params.min_distance_m;
    const double R = params.cell_radius_m;
    const double span = R * R - r * r;
    const double log_R = std::log(R);
    const double log_r = std::log(r);
    const double mean_ln =
        (R * R * (log_R - 0.5) - r * r * (log_r - 0.5)) / span;
    const double mean_ln_sq =
        (R * R * (log_R * log_R - log_R + 0.5) - r * r * (log_r * log_r - log_r + 0.5)) /
        span;
    const double var_ln = mean_ln_sq - mean_ln * mean_ln;
    const double pathloss_scale = 10.0 * params.pathloss_exp / std::log(10.0);
    return params.shadowing_db * params.shadowing_db + pathloss_scale * pathloss_scale * var_ln;
}

NmseReport nmse_metrics(const SampleSet& samples, double lsfc_db_var) {
    if (samples.beta_hat.size() != samples.beta_true.size())
        throw std::invalid_argument("gain estimates and truths must pair up");
    if (samples.beta_hat.empty() && samples.ssfc_err_sq.empty())
        throw std::invalid_argument("empty sample set");

    NmseReport report;
    if (!samples.beta_hat.empty()) {
        if (!(lsfc_db_var > 0.0))
            throw std::invalid_argument("the dB-domain normalizer must be positive");
        double sum = 0.0;
        std::size_t positive = 0;
        for (std::size_t i = 0; i < samples.beta_hat.size(); ++i) {
            if (samples.beta_hat[i] > 0.0) {
                const double err_db = 10.0 * std::log10(samples.beta_hat[i] / samples.beta_true[i]);
                sum += err_db * err_db;
                ++positive;
            }
        }
        report.failure_rate =
            1.0 - static_cast<double>(positive) / static_cast<double>(samples.beta_hat.size());
        report.nmse_lsfc_db = positive == 0 ? 0.0 : sum / positive / lsfc_db_var;
    }
    if (!samples.ssfc_err_sq.empty()) {
        if (samples.ssfc_dim < 1)
            throw std::invalid_argument("the fading dimension must be positive");
        double sum = 0.0;
        for (double err : samples.ssfc_err_sq)
            sum += err;
        report.nmse_ssfc = sum / samples.ssfc_err_sq.size() / samples.ssfc_dim;
    }
    return report;
}

double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("slope fit needs at least two matched points");
    const auto n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace chanest
