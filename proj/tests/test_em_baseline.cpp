// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "chanest/analysis.hpp"
#include "chanest/em_baseline.hpp"
#include "chanest/errors.hpp"
#include "chanest/lsfc_estimator.hpp"
#include "chanest/rng.hpp"
#include "oracle_helpers.hpp"

using namespace chanest;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

namespace {

constexpr double kDeg = M_PI / 180.0;

MatrixXcd random_matrix(int rows, int cols, RngStream& rng) {
    MatrixXcd out(rows, cols);
    for (int c = 0; c < cols; ++c)
        for (int r = 0; r < rows; ++r)
            out(r, c) = rng.cnormal();
    return out;
}

// Explicit Khatri-Rao regressor, column k = conj(p_k) kron h_k.
MatrixXcd explicit_regressor(const MatrixXcd& h, const PilotMatrix& pilots) {
    const int m = static_cast<int>(h.rows());
    const int t = pilots.pilot_len();
    MatrixXcd a(m * t, h.cols());
    for (int k = 0; k < h.cols(); ++k) {
        const VectorXcd pilot = pilots.user_pilot(k);
        for (int col_t = 0; col_t < t; ++col_t)
            a.block(col_t * m, k, m, 1) = std::conj(pilot[col_t]) * h.col(k);
    }
    return a;
}

VectorXcd vec_of(const MatrixXcd& y) {
    VectorXcd v(y.size());
    int idx = 0;
    for (int c = 0; c < y.cols(); ++c)
        for (int r = 0; r < y.rows(); ++r)
            v[idx++] = y(r, c);
    return v;
}

} // namespace

TEST_CASE("regressor gram identity against the explicit construction") {
    RngStream rng(51);
    const int m = 6, users = 2, t = 3;
    const PilotMatrix pilots = orthogonal_pilots(users, t, 1.4);
    const MatrixXcd h = random_matrix(m, users, rng);
    const MatrixXcd a = explicit_regressor(h, pilots);
    const MatrixXcd direct = a.adjoint() * a;
    const MatrixXcd via_identity = khatri_rao_pilot_gram(h, pilots);
    CHECK((direct - via_identity).cwiseAbs().maxCoeff() < 1e-10);

    // the vectorized model reproduces the block
    VectorXd beta(users);
    beta << 0.4, 1.1;
    ReceivedBlock block;
    block.y = h * beta.cwiseSqrt().asDiagonal() * pilots.rows();
    CHECK((a * beta.cwiseSqrt() - vec_of(block.y)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("perfect-fading ls recovers gains from clean observations") {
    RngStream rng(52);
    const int m = 16;
    const PilotMatrix pilots = orthogonal_pilots(1, 2, 1.0);
    const MatrixXcd h = random_matrix(m, 1, rng);
    VectorXd beta(1);
    beta << 0.37;
    ReceivedBlock block;
    block.y = h * beta.cwiseSqrt().asDiagonal() * pilots.rows();
    const VectorXd est = conventional_lsfc_ls(block, h, pilots);
    CHECK(est[0] == doctest::Approx(beta[0]).epsilon(1e-12));
}

TEST_CASE("perfect-fading ls improves with the array size") {
    RngStream rng(53);
    const PilotMatrix pilots = orthogonal_pilots(2, 4, 10.0);
    VectorXd beta(2);
    beta << 1.0, 0.5;
    double previous = 1e300;
    for (int m : {32, 64, 128}) {
        const CorrelationMatrix corr = correlation_from_profile(
            m, SpatialProfile::uniform_pas(0.3, 15.0 * kDeg, 0.5));
        double mse = 0.0;
        const int trials = 400;
        for (int i = 0; i < trials; ++i) {
            MatrixXcd h(m, 2);
            for (int k = 0; k < 2; ++k)
                h.col(k) = corr.sqrt() * random_matrix(m, 1, rng);
            ReceivedBlock block;
            block.y = h * beta.cwiseSqrt().asDiagonal() * pilots.rows() +
                      random_matrix(m, 4, rng);
            const VectorXd est = conventional_lsfc_ls(block, h, pilots);
            for (int k = 0; k < 2; ++k)
                mse += (est[k] - beta[k]) * (est[k] - beta[k]) / (beta[k] * beta[k]);
        }
        mse /= 2 * trials;
        CHECK(mse < previous);
        previous = mse;
    }
}

TEST_CASE("zero iterations return the prior mean") {
    RngStream rng(54);
    const int m = 16, users = 2, t = 2;
    const PilotMatrix pilots = orthogonal_pilots(users, t, 1.0);
    std::vector<CorrelationMatrix> corr(
        users, CorrelationMatrix::from_matrix(MatrixXcd::Identity(m, m)));
    EmPrior prior;
    prior.mean_sqrt_beta = VectorXd::Constant(users, 0.123);
    prior.cov_sqrt_beta = 0.5 * MatrixXd::Identity(users, users);
    ReceivedBlock block;
    block.y = random_matrix(m, t, rng);
    const EmResult result = em_joint(block, pilots, corr, prior, 0, EmVariant::em);
    CHECK(result.iterations == 0);
    CHECK(result.trace.size() == 1);
    CHECK((result.final.sqrt_beta_hat - prior.mean_sqrt_beta).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("white-correlation fading update is a scaled matched filter") {
    RngStream rng(55);
    const int m = 24, users = 2, t = 2;
    const PilotMatrix pilots = orthogonal_pilots(users, t, 2.0);
    std::vector<CorrelationMatrix> corr(
        users, CorrelationMatrix::from_matrix(MatrixXcd::Identity(m, m)));
    const EmCorrelationCache cache(corr);
    ReceivedBlock block;
    block.y = random_matrix(m, t, rng);
    VectorXd sqrt_beta(users);
    sqrt_beta << 0.8, 1.5;
    const MatrixXcd h_hat = em_ssfc_update(block, pilots, cache, sqrt_beta);
    for (int k = 0; k < users; ++k) {
        const VectorXcd matched = block.y * pilots.user_pilot(k);
        const double scale =
            sqrt_beta[k] / (1.0 + pilots.energy(k) * sqrt_beta[k] * sqrt_beta[k]);
        CHECK((h_hat.col(k) - scale * matched).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("gain update variants coincide on exactly hardened fading") {
    RngStream rng(56);
    const int m = 12, users = 3, t = 4;
    const PilotMatrix pilots = orthogonal_pilots(users, t, 1.0);
    // columns sqrt(m) e_k: exactly orthogonal, squared norm exactly m
    MatrixXcd h_hard = MatrixXcd::Zero(m, users);
    for (int k = 0; k < users; ++k)
        h_hard(k, k) = std::sqrt(static_cast<double>(m));
    EmPrior prior;
    prior.mean_sqrt_beta = VectorXd::Constant(users, 0.4);
    prior.cov_sqrt_beta = 0.3 * MatrixXd::Identity(users, users);
    ReceivedBlock block;
    block.y = random_matrix(m, t, rng);
    const VectorXd em = em_lsfc_update(block, pilots, h_hard, prior, EmVariant::em);
    const VectorXd mem = em_lsfc_update(block, pilots, h_hard, prior, EmVariant::mem);
    CHECK((em - mem).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("gram deviation from its diagonal limit shrinks with the array") {
    RngStream rng(57);
    const PilotMatrix pilots = orthogonal_pilots(4, 4, 1.0);
    double previous = 1e300;
    for (int m : {32, 64, 128}) {
        const CorrelationMatrix corr = correlation_from_profile(
            m, SpatialProfile::uniform_pas(0.25, 15.0 * kDeg, 0.5));
        double acc = 0.0;
        const int draws = 150;
        for (int i = 0; i < draws; ++i) {
            MatrixXcd h(m, 4);
            for (int k = 0; k < 4; ++k)
                h.col(k) = corr.sqrt() * random_matrix(m, 1, rng);
            const MatrixXcd gram = khatri_rao_pilot_gram(h, pilots);
            VectorXd diag(4);
            for (int k = 0; k < 4; ++k)
                diag[k] = double(m) * pilots.energy(k);
            acc += (gram - MatrixXcd(diag.cast<std::complex<double>>().asDiagonal())).norm() /
                   (double(m) * pilots.energy(0));
        }
        acc /= draws;
        CHECK(acc < previous);
        previous = acc;
    }
}

TEST_CASE("joint estimation stays behind the decoupled estimator") {
    const int m = 64, users = 4, t = 4;
    const double snr = 10.0;
    const LargeScaleParams params(3.0, 10.0, 100.0);
    const double db_var = lsfc_db_variance(params);
    RngStream setup(58);
    std::vector<CorrelationMatrix> corr;
    std::vector<MatrixXcd> factors;
    for (int k = 0; k < users; ++k) {
        const double aoa = (setup.uniform() * 120.0 - 60.0) * kDeg;
        const SpatialProfile profile = SpatialProfile::scm(aoa, 7.2 * kDeg, 0.5);
        corr.push_back(correlation_from_profile(m, profile));
        factors.push_back(scm_subpath_factor(m, profile));
    }
    const EmCorrelationCache cache(corr);
    RngStream prior_rng(58, 0, 1);
    const EmPrior prior = em_prior_from_model(users, params, prior_rng, 100000);

    const SystemDims dims(m, users, t, 1);
    double em_nmse = 0.0, mem_nmse = 0.0, dec_nmse = 0.0;
    long em_n = 0, mem_n = 0, dec_n = 0;
    RngStream rng(59);
    const int trials = 150;
    for (int i = 0; i < trials; ++i) {
        const LargeScaleRealization lsfc = gen_lsfc(dims, params, rng);
        const PilotMatrix pilots =
            orthogonal_pilots(users, t, power_for_target_snr(lsfc.beta, snr));
        MatrixXcd h(m, users);
        for (int k = 0; k < users; ++k)
            h.col(k) = factors[k] * random_matrix(20, 1, rng);
        ReceivedBlock block;
        block.y =
            h * lsfc.beta.cwiseSqrt().asDiagonal() * pilots.rows() + random_matrix(m, t, rng);

        for (int v = 0; v < 2; ++v) {
            const EmResult result = em_joint(block, pilots, cache, prior, 5,
                                             v == 0 ? EmVariant::em : EmVariant::mem, 0.0);
            const VectorXd beta_hat = result.final.sqrt_beta_hat.array().square();
            for (int k = 0; k < users; ++k)
                if (beta_hat[k] > 0.0) {
                    const double e = 10.0 * std::log10(beta_hat[k] / lsfc.beta[k]);
                    (v == 0 ? em_nmse : mem_nmse) += e * e / db_var;
                    (v == 0 ? em_n : mem_n) += 1;
                }
        }
        const LsfcEstimate dec = estimate_lsfc(block, pilots);
        for (int k = 0; k < users; ++k)
            if (dec.beta_hat[k] > 0.0) {
                const double e = 10.0 * std::log10(dec.beta_hat[k] / lsfc.beta[k]);
                dec_nmse += e * e / db_var;
                dec_n += 1;
            }
    }
    em_nmse /= em_n;
    mem_nmse /= mem_n;
    dec_nmse /= dec_n;
    CHECK(em_nmse > dec_nmse);
    CHECK(mem_nmse > dec_nmse);
}

TEST_CASE("prior estimation is reproducible and sane") {
    const LargeScaleParams params(3.0, 10.0, 100.0);
    RngStream a(60), b(60);
    const EmPrior p1 = em_prior_from_model(3, params, a, 50000);
    const EmPrior p2 = em_prior_from_model(3, params, b, 50000);
    CHECK(p1.mean_sqrt_beta[0] == p2.mean_sqrt_beta[0]);
    CHECK(p1.mean_sqrt_beta[0] > 0.0);
    CHECK(p1.cov_sqrt_beta(0, 0) > 0.0);
    CHECK(p1.cov_sqrt_beta(0, 1) == 0.0);
}

TEST_CASE("singular prior covariance is reported") {
    RngStream rng(61);
    const int m = 8, users = 2, t = 2;
    const PilotMatrix pilots = orthogonal_pilots(users, t, 1.0);
    std::vector<CorrelationMatrix> corr(
        users, CorrelationMatrix::from_matrix(MatrixXcd::Identity(m, m)));
    EmPrior prior;
    prior.mean_sqrt_beta = VectorXd::Constant(users, 0.1);
    prior.cov_sqrt_beta = MatrixXd::Zero(users, users);
    ReceivedBlock block;
    block.y = random_matrix(m, t, rng);
    CHECK_THROWS_AS(em_joint(block, pilots, corr, prior, 2, EmVariant::mem),
                    numeric_error);
}
