// SPDX-License-Identifier: Apache-2.0
#include "chanest/em_baseline.hpp"

#include <cmath>
#include <stdexcept>

#include "chanest/errors.hpp"

namespace chanest {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

EmPrior em_prior_from_model(int n_users, const LargeScaleParams& params, RngStream& rng,
                            int n_samples) {
    if (n_samples < 2)
        throw std::invalid_argument("prior estimation needs at least two samples");
    const SystemDims probe(1, 1, 1);
    double sum = 0.0, sum_sq = 0.0;
    const double r2_min = params.min_distance_m * params.min_distance_m;
    const double r2_max = params.cell_radius_m * params.cell_radius_m;
    for (int i = 0; i < n_samples; ++i) {
        const double d = std::sqrt(r2_min + rng.uniform() * (r2_max - r2_min));
        const double s_db = params.shadowing_db * rng.normal();
        const double root = std::sqrt(lsfc_gain(d, s_db, params.pathloss_exp));
        sum += root;
        sum_sq += root * root;
    }
    const double mean = sum / n_samples;
    const double var = (sum_sq - n_samples * mean * mean) / (n_samples - 1);

    EmPrior prior;
    prior.mean_sqrt_beta = VectorXd::Constant(n_users, mean);
    prior.cov_sqrt_beta = var * MatrixXd::Identity(n_users, n_users);
    return prior;
}

Eigen::MatrixXcd khatri_rao_pilot_gram(const Eigen::MatrixXcd& h, const PilotMatrix& pilots) {
    if (h.cols() != pilots.n_users())
        throw std::invalid_argument("channel and pilots disagree on the user count");
    const MatrixXcd channel_gram = h.adjoint() * h;
    const MatrixXcd pilot_gram = pilots.rows() * pilots.rows().adjoint();
    return channel_gram.cwiseProduct(pilot_gram.conjugate());
}

Eigen::VectorXd conventional_lsfc_ls(const ReceivedBlock& block,
                                     const Eigen::MatrixXcd& h_true,
                                     const PilotMatrix& pilots) {
    const int n_users = pilots.n_users();
    if (block.y.rows() != h_true.rows() || block.y.cols() != pilots.pilot_len())
        throw std::invalid_argument("block, channel and pilots disagree on dimensions");

    // A^H vec(Y) with A column k = conj(p_k) kron h_k reduces to h_k^H Y p_k.
    VectorXcd rhs(n_users);
    for (int k = 0; k < n_users; ++k)
        rhs[k] = h_true.col(k).dot(block.y * pilots.user_pilot(k));

    const MatrixXcd gram = khatri_rao_pilot_gram(h_true, pilots);
    Eigen::FullPivLU<MatrixXcd> lu(gram);
    if (!lu.isInvertible())
        throw numeric_error("Khatri-Rao Gram matrix is singular");
    const VectorXcd root = lu.solve(rhs);
    return root.real().array().square();
}

EmCorrelationCache::EmCorrelationCache(const std::vector<CorrelationMatrix>& correlations) {
    if (correlations.empty())
        throw std::invalid_argument("at least one correlation matrix is required");
    bases_.reserve(correlations.size());
    eigenvalues_.reserve(correlations.size());
    for (const CorrelationMatrix& c : correlations) {
        Eigen::SelfAdjointEigenSolver<MatrixXcd> es(c.phi());
        if (es.info() != Eigen::Success)
            throw numeric_error("correlation eigendecomposition failed");
        bases_.push_back(es.eigenvectors());
        eigenvalues_.push_back(es.eigenvalues().cwiseMax(0.0));
    }
}

Eigen::VectorXcd EmCorrelationCache::solve(int user, double ridge,
                                           const Eigen::VectorXcd& rhs) const {
    const VectorXd& vals = eigenvalues_[user];
    if (vals.minCoeff() + ridge <= 1e-14)
        throw numeric_error("regularized fading update system is singular");
    const MatrixXcd& basis = bases_[user];
    VectorXcd coeffs = basis.adjoint() * rhs;
    coeffs.array() /= (vals.array() + ridge);
    return basis * coeffs;
}

Eigen::MatrixXcd em_ssfc_update(const ReceivedBlock& block, const PilotMatrix& pilots,
                                const EmCorrelationCache& cache,
                                const Eigen::VectorXd& sqrt_beta_hat) {
    const int n_users = pilots.n_users();
    if (sqrt_beta_hat.size() != n_users || cache.n_users() != n_users)
        throw std::invalid_argument("gain vector, cache and pilots disagree on users");
    MatrixXcd h_hat(block.y.rows(), n_users);
    for (int k = 0; k < n_users; ++k) {
        const double beta = sqrt_beta_hat[k] * sqrt_beta_hat[k];
        const VectorXcd matched = block.y * pilots.user_pilot(k);
        h_hat.col(k) = sqrt_beta_hat[k] * cache.solve(k, pilots.energy(k) * beta, matched);
    }
    return h_hat;
}

Eigen::VectorXd em_lsfc_update(const ReceivedBlock& block, const PilotMatrix& pilots,
                               const Eigen::MatrixXcd& h_hat, const EmPrior& prior,
                               EmVariant variant) {
    const int n_users = pilots.n_users();

    VectorXcd ah_y(n_users);
    for (int k = 0; k < n_users; ++k)
        ah_y[k] = h_hat.col(k).dot(block.y * pilots.user_pilot(k));

    MatrixXcd gram;
    if (variant == EmVariant::em) {
        gram = khatri_rao_pilot_gram(h_hat, pilots);
    } else {
        VectorXd diag(n_users);
        for (int k = 0; k < n_users; ++k)
            diag[k] = static_cast<double>(block.y.rows()) * pilots.energy(k);
        gram = diag.cast<std::complex<double>>().asDiagonal();
    }

    Eigen::FullPivLU<MatrixXd> cov_lu(prior.cov_sqrt_beta);
    if (!cov_lu.isInvertible())
        throw numeric_error("prior covariance is singular");
    const MatrixXcd system =
        cov_lu.inverse().cast<std::complex<double>>() + gram;

    Eigen::FullPivLU<MatrixXcd> lu(system);
    if (!lu.isInvertible())
        throw numeric_error("regularized gain update system is singular");
    const VectorXcd mean = prior.mean_sqrt_beta.cast<std::complex<double>>();
    const VectorXcd update = lu.solve(ah_y - gram * mean);
    // The root gains are real parameters; the imaginary residue is noise.
    return prior.mean_sqrt_beta + update.real();
}

EmResult em_joint(const ReceivedBlock& block, const PilotMatrix& pilots,
                  const EmCorrelationCache& cache, const EmPrior& prior, int max_iters,
                  EmVariant variant, double tol) {
    if (max_iters < 0)
        throw std::invalid_argument("iteration cap cannot be negative");
    if (prior.mean_sqrt_beta.size() != pilots.n_users())
        throw std::invalid_argument("prior and pilots disagree on the user count");

    EmResult result;
    EmIterate state;
    state.sqrt_beta_hat = prior.mean_sqrt_beta;
    result.trace.push_back(state);

    for (int it = 0; it < max_iters; ++it) {
        state.h_hat = em_ssfc_update(block, pilots, cache, state.sqrt_beta_hat);
        const VectorXd next = em_lsfc_update(block, pilots, state.h_hat, prior, variant);
        const double change = (next - state.sqrt_beta_hat)
                                  .cwiseAbs()
                                  .cwiseQuotient(next.cwiseAbs().cwiseMax(1e-12))
                                  .maxCoeff();
        state.sqrt_beta_hat = next;
        result.trace.push_back(state);
        result.iterations = it + 1;
        if (change < tol)
            break;
    }
    result.final = result.trace.back();
    return result;
}

EmResult em_joint(const ReceivedBlock& block, const PilotMatrix& pilots,
                  const std::vector<CorrelationMatrix>& correlations, const EmPrior& prior,
                  int max_iters, EmVariant variant, double tol) {
    return em_joint(block, pilots, EmCorrelationCache(correlations), prior, max_iters,
                    variant, tol);
}

} // namespace chanest
