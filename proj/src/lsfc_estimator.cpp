// SPDX-License-Identifier: Apache-2.0
#include "chanest/lsfc_estimator.hpp"

#include <cmath>
#include <stdexcept>

namespace chanest {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

namespace {

void check_block(const ReceivedBlock& block, const PilotMatrix& pilots) {
    if (block.y.cols() != pilots.pilot_len())
        throw std::invalid_argument("received block and pilots disagree on the pilot length");
    if (block.y.rows() < block.y.cols())
        throw std::invalid_argument("received block must have at least pilot_len antennas");
}

} // namespace

LsfcEstimate estimate_lsfc(const ReceivedBlock& block, const PilotMatrix& pilots) {
    return estimate_lsfc_multi({block}, pilots);
}

LsfcEstimate estimate_lsfc_multi(const std::vector<ReceivedBlock>& blocks,
                                 const PilotMatrix& pilots) {
    if (blocks.empty())
        throw std::invalid_argument("at least one received block is required");
    const int n_users = pilots.n_users();
    const int n_blocks = static_cast<int>(blocks.size());
    const int m = static_cast<int>(blocks.front().y.rows());

    LsfcEstimate out;
    out.blocks_used = n_blocks;
    out.beta_hat = VectorXd::Zero(n_users);
    for (const ReceivedBlock& block : blocks) {
        check_block(block, pilots);
        if (block.y.rows() != m)
            throw std::invalid_argument("all blocks must share dimensions");
        for (int k = 0; k < n_users; ++k)
            out.beta_hat[k] += (block.y * pilots.user_pilot(k)).squaredNorm();
    }
    for (int k = 0; k < n_users; ++k) {
        const double energy = pilots.energy(k);
        out.beta_hat[k] = (out.beta_hat[k] - m * n_blocks * energy) /
                          (static_cast<double>(m) * n_blocks * energy * energy);
    }
    return out;
}

Eigen::VectorXd estimate_lsfc_matrix_form(const std::vector<ReceivedBlock>& blocks,
                                          const PilotMatrix& pilots) {
    if (blocks.empty())
        throw std::invalid_argument("at least one received block is required");
    const int n_users = pilots.n_users();
    const int t = pilots.pilot_len();
    const int m = static_cast<int>(blocks.front().y.rows());
    const int n_blocks = static_cast<int>(blocks.size());

    MatrixXcd gram = MatrixXcd::Zero(t, t);
    for (const ReceivedBlock& block : blocks) {
        check_block(block, pilots);
        gram.noalias() += block.y.adjoint() * block.y;
    }
    gram /= static_cast<double>(m) * n_blocks;
    gram -= MatrixXcd::Identity(t, t);

    // Column-major stack of the centered Gram matrix.
    VectorXcd vec_gram(t * t);
    for (int c = 0; c < t; ++c)
        for (int r = 0; r < t; ++r)
            vec_gram[r + t * c] = gram(r, c);

    //   ((1_T^T kron P) hadamard (conj(P) kron 1_T^T)) vec(.)
    // with P rows equal to p_k^H; entry (k, r + T c) = conj(p_k[r]) p_k[c].
    const MatrixXcd& rows = pilots.rows();
    VectorXd beta(n_users);
    for (int k = 0; k < n_users; ++k) {
        std::complex<double> acc = 0.0;
        for (int c = 0; c < t; ++c)
            for (int r = 0; r < t; ++r)
                acc += rows(k, r) * std::conj(rows(k, c)) * vec_gram[r + t * c];
        const double energy = pilots.energy(k);
        beta[k] = acc.real() / (energy * energy);
    }
    return beta;
}

ReceivedBlock scale_to_unit_noise(const ReceivedBlock& block, double noise_power) {
    if (!(noise_power > 0.0))
        throw std::invalid_argument("noise power must be positive to normalize");
    ReceivedBlock out = block;
    out.y /= std::sqrt(noise_power);
    return out;
}

LsfcErrorTerms lsfc_error_decomposition(const Eigen::VectorXcd& h_user, double beta_user,
                                        const Eigen::MatrixXcd& noise,
                                        const PilotMatrix& pilots, int user) {
    const int m = static_cast<int>(h_user.size());
    if (noise.rows() != m || noise.cols() != pilots.pilot_len())
        throw std::invalid_argument("noise matrix dimensions disagree with channel and pilots");

    const VectorXcd pilot = pilots.user_pilot(user);
    const double energy = pilots.energy(user);
    const VectorXcd noise_proj = noise * pilot;

    LsfcErrorTerms terms{};
    terms.noise_quadratic = (noise_proj.squaredNorm() - m * energy) / (m * energy * energy);
    terms.hardening = beta_user * (h_user.squaredNorm() - m) / m;
    terms.cross = std::sqrt(beta_user) * 2.0 * (h_user.dot(noise_proj)).real() / (m * energy);
    return terms;
}

} // namespace chanest
