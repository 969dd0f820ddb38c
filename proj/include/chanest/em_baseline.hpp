// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "chanest/channel_model.hpp"
#include "chanest/pilots.hpp"

namespace chanest {

// Prior moments of the root gains used to initialize and regularize the EM
// iteration. Users are independent, so the covariance is diagonal in practice.
struct EmPrior {
    Eigen::VectorXd mean_sqrt_beta;
    Eigen::MatrixXd cov_sqrt_beta;
};

// Sample-moment prior from the generative pathloss/shadowing model.
EmPrior em_prior_from_model(int n_users, const LargeScaleParams& params, RngStream& rng,
                            int n_samples = 1000000);

enum class EmVariant { em, mem };

struct EmIterate {
    Eigen::VectorXd sqrt_beta_hat;
    Eigen::MatrixXcd h_hat; // empty at initialization
};

struct EmResult {
    EmIterate final;
    int iterations = 0;
    // trace[0] is the initialization, trace[i] the state after iteration i.
    std::vector<EmIterate> trace;
};

// Gains recovered by LS when the fast fading is known exactly:
// sqrt_beta = (A^H A)^(-1) A^H vec(Y) with A built from the true channel.
// Returns the squared real parts.
Eigen::VectorXd conventional_lsfc_ls(const ReceivedBlock& block,
                                     const Eigen::MatrixXcd& h_true,
                                     const PilotMatrix& pilots);

// Gram matrix of the Khatri-Rao regressor: (H^H H) hadamard conj(P P^H).
Eigen::MatrixXcd khatri_rao_pilot_gram(const Eigen::MatrixXcd& h, const PilotMatrix& pilots);

// Per-user eigendecompositions of the correlations, reused across trials so
// each fading update costs two matrix-vector products instead of a solve.
class EmCorrelationCache {
public:
    explicit EmCorrelationCache(const std::vector<CorrelationMatrix>& correlations);

    int n_users() const { return static_cast<int>(bases_.size()); }
    int dim() const { return static_cast<int>(bases_.front().rows()); }

    // (Phi_k + ridge I)^(-1) rhs.
    Eigen::VectorXcd solve(int user, double ridge, const Eigen::VectorXcd& rhs) const;

private:
    std::vector<Eigen::MatrixXcd> bases_;
    std::vector<Eigen::VectorXd> eigenvalues_;
};

// Fading update for fixed gains (one half-step of the iteration):
// h_k = sqrt(beta_k) (Phi_k + ||p_k||^2 beta_k I)^(-1) Y p_k.
Eigen::MatrixXcd em_ssfc_update(const ReceivedBlock& block, const PilotMatrix& pilots,
                                const EmCorrelationCache& cache,
                                const Eigen::VectorXd& sqrt_beta_hat);

// Gain update for a fixed fading estimate (the other half-step):
// prior-regularized LS on the Khatri-Rao model; the mem variant replaces the
// regressor Gram matrix by its large-array diagonal limit Diag(M ||p_k||^2).
Eigen::VectorXd em_lsfc_update(const ReceivedBlock& block, const PilotMatrix& pilots,
                               const Eigen::MatrixXcd& h_hat, const EmPrior& prior,
                               EmVariant variant);

// Full alternating estimator. Stops after max_iters or once the largest
// relative change of the root gains drops below tol.
EmResult em_joint(const ReceivedBlock& block, const PilotMatrix& pilots,
                  const EmCorrelationCache& cache, const EmPrior& prior, int max_iters,
                  EmVariant variant, double tol = 1e-6);

EmResult em_joint(const ReceivedBlock& block, const PilotMatrix& pilots,
                  const std::vector<CorrelationMatrix>& correlations, const EmPrior& prior,
                  int max_iters, EmVariant variant, double tol = 1e-6);

} // namespace chanest
