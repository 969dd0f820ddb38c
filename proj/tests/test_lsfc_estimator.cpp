// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "chanest/analysis.hpp"
#include "chanest/lsfc_estimator.hpp"
#include "chanest/rng.hpp"
#include "oracle_helpers.hpp"

using namespace chanest;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

namespace {

constexpr double kDeg = M_PI / 180.0;

ReceivedBlock noisy_block(const MatrixXcd& h, const VectorXd& beta, const PilotMatrix& pilots,
                          RngStream& rng) {
    ReceivedBlock block;
    block.y = h * beta.cwiseSqrt().asDiagonal() * pilots.rows();
    for (int c = 0; c < block.y.cols(); ++c)
        for (int r = 0; r < block.y.rows(); ++r)
            block.y(r, c) += rng.cnormal();
    return block;
}

MatrixXcd correlated_draw(const CorrelationMatrix& corr, int users, RngStream& rng) {
    MatrixXcd h(corr.dim(), users);
    for (int k = 0; k < users; ++k) {
        VectorXcd white(corr.dim());
        for (int i = 0; i < corr.dim(); ++i)
            white[i] = rng.cnormal();
        h.col(k) = corr.sqrt() * white;
    }
    return h;
}

} // namespace

TEST_CASE("noiseless single-user value with the unit-noise offset") {
    // h = [1,1,1,1], beta = 1, ||p||^2 = 2: estimate is 1 - 1/2.
    MatrixXcd h(4, 1);
    h.setOnes();
    const PilotMatrix pilots = orthogonal_pilots(1, 1, 2.0);
    ReceivedBlock block;
    block.y = h * pilots.rows();
    const LsfcEstimate est = estimate_lsfc(block, pilots);
    CHECK(est.beta_hat[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("noiseless blocks are exact up to the noise-model offset") {
    RngStream rng(11);
    const int m = 32, users = 3, t = 4;
    const PilotMatrix pilots = orthogonal_pilots(users, t, 1.5);
    MatrixXcd h(m, users);
    for (int c = 0; c < users; ++c)
        for (int r = 0; r < m; ++r)
            h(r, c) = rng.cnormal();
    VectorXd beta(users);
    beta << 0.5, 2.0, 0.01;
    ReceivedBlock block;
    block.y = h * beta.cwiseSqrt().asDiagonal() * pilots.rows();
    const LsfcEstimate est = estimate_lsfc(block, pilots);
    for (int k = 0; k < users; ++k) {
        const double expected = beta[k] * h.col(k).squaredNorm() / m - 1.0 / pilots.energy(k);
        CHECK(est.beta_hat[k] == doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("the asymptotic Gram matrix is inverted exactly") {
    const int m = 16, users = 3, t = 4;
    const PilotMatrix pilots = orthogonal_pilots(users, t, 1.0);
    VectorXd beta(users);
    beta << 0.2, 1.0, 3.5;
    const MatrixXcd gram =
        double(m) * (pilots.rows().adjoint() * beta.asDiagonal() * pilots.rows() +
                     MatrixXcd::Identity(t, t));
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(gram);
    const MatrixXcd root =
        es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() *
        es.eigenvectors().adjoint();
    ReceivedBlock block;
    block.y = MatrixXcd::Zero(m, t);
    block.y.topRows(t) = root;
    const LsfcEstimate est = estimate_lsfc(block, pilots);
    for (int k = 0; k < users; ++k)
        CHECK(est.beta_hat[k] == doctest::Approx(beta[k]).epsilon(1e-12));
}

TEST_CASE("matrix form and element-wise form agree to machine precision") {
    RngStream rng(12);
    for (int rep = 0; rep < 20; ++rep) {
        const int m = 8 + 4 * (rep % 3);
        const int t = 4;
        const int users = 1 + rep % 4;
        const PilotMatrix pilots = orthogonal_pilots(users, t, 0.5 + rep * 0.1);
        const int blocks_n = 1 + rep % 3;
        std::vector<ReceivedBlock> blocks(blocks_n);
        for (ReceivedBlock& block : blocks) {
            block.y.resize(m, t);
            for (int c = 0; c < t; ++c)
                for (int r = 0; r < m; ++r)
                    block.y(r, c) = rng.cnormal();
        }
        const LsfcEstimate elementwise = estimate_lsfc_multi(blocks, pilots);
        const VectorXd matrix_form = estimate_lsfc_matrix_form(blocks, pilots);
        for (int k = 0; k < users; ++k)
            CHECK(std::abs(elementwise.beta_hat[k] - matrix_form[k]) <
                  1e-12 * std::max(1.0, std::abs(matrix_form[k])));
    }
}

TEST_CASE("multi-block reductions") {
    RngStream rng(13);
    const int m = 24, users = 2, t = 4;
    const PilotMatrix pilots = orthogonal_pilots(users, t, 1.0);
    MatrixXcd h(m, users);
    for (int c = 0; c < users; ++c)
        for (int r = 0; r < m; ++r)
            h(r, c) = rng.cnormal();
    const VectorXd beta = VectorXd::Constant(users, 0.8);
    const ReceivedBlock block = noisy_block(h, beta, pilots, rng);

    const LsfcEstimate single = estimate_lsfc(block, pilots);
    const LsfcEstimate one = estimate_lsfc_multi({block}, pilots);
    CHECK(one.blocks_used == 1);
    CHECK((one.beta_hat - single.beta_hat).cwiseAbs().maxCoeff() < 1e-15);

    const LsfcEstimate repeated = estimate_lsfc_multi({block, block, block}, pilots);
    CHECK((repeated.beta_hat - single.beta_hat).cwiseAbs().maxCoeff() < 1e-12);

    CHECK_THROWS_AS(estimate_lsfc_multi({}, pilots), std::invalid_argument);
}

TEST_CASE("estimates are unbiased under correlated fading") {
    const int m = 64, users = 2, t = 4;
    const CorrelationMatrix corr =
        correlation_from_profile(m, SpatialProfile::scm(0.4, 15.0 * kDeg, 0.5));
    VectorXd beta(users);
    beta << 1.3, 0.4;
    const PilotMatrix pilots =
        orthogonal_pilots(users, t, power_for_target_snr(beta, 10.0));
    RngStream rng(14);
    const int trials = 4000;
    std::vector<std::vector<double>> draws(users, std::vector<double>(trials));
    for (int i = 0; i < trials; ++i) {
        const MatrixXcd h = correlated_draw(corr, users, rng);
        const ReceivedBlock block = noisy_block(h, beta, pilots, rng);
        const LsfcEstimate est = estimate_lsfc(block, pilots);
        for (int k = 0; k < users; ++k)
            draws[k][i] = est.beta_hat[k];
    }
    for (int k = 0; k < users; ++k) {
        const oracle::Stats s = oracle::stats_of(draws[k]);
        CHECK(std::abs(s.mean - beta[k]) < 3.0 * s.std_error);
    }
}

TEST_CASE("negative estimates are reported, not clamped") {
    const int m = 16, t = 2;
    const PilotMatrix pilots = orthogonal_pilots(1, t, 1.0);
    const VectorXd beta = VectorXd::Constant(1, 1e-8);
    RngStream rng(15);
    bool saw_negative = false;
    for (int i = 0; i < 200 && !saw_negative; ++i) {
        MatrixXcd h(m, 1);
        for (int r = 0; r < m; ++r)
            h(r, 0) = rng.cnormal();
        const ReceivedBlock block = noisy_block(h, beta, pilots, rng);
        saw_negative = estimate_lsfc(block, pilots).beta_hat[0] < 0.0;
    }
    CHECK(saw_negative);
}

TEST_CASE("noise rescaling maps estimates to beta over noise power") {
    RngStream rng(16);
    const int m = 48, t = 4;
    const PilotMatrix pilots = orthogonal_pilots(1, t, 4.0);
    const double noise_power = 2.5;
    const VectorXd beta = VectorXd::Constant(1, 1.0);
    // noiseless signal plus scaled noise, then normalized back to unit noise
    MatrixXcd h(m, 1);
    for (int r = 0; r < m; ++r)
        h(r, 0) = rng.cnormal();
    ReceivedBlock block;
    block.y = h * beta.cwiseSqrt().asDiagonal() * pilots.rows();
    const ReceivedBlock normalized = scale_to_unit_noise(block, noise_power);
    const LsfcEstimate est = estimate_lsfc(normalized, pilots);
    const double expected =
        (beta[0] / noise_power) * h.col(0).squaredNorm() / m - 1.0 / pilots.energy(0);
    CHECK(est.beta_hat[0] == doctest::Approx(expected).epsilon(1e-10));
    CHECK_THROWS_AS(scale_to_unit_noise(block, 0.0), std::invalid_argument);
}

TEST_CASE("error decomposition identities") {
    RngStream rng(17);
    const int m = 20, users = 2, t = 4;
    const PilotMatrix pilots = orthogonal_pilots(users, t, 1.2);
    VectorXd beta(users);
    beta << 0.7, 1.9;

    SUBCASE("zero noise pins the quadratic and cross terms") {
        MatrixXcd h(m, users);
        for (int c = 0; c < users; ++c)
            for (int r = 0; r < m; ++r)
                h(r, c) = rng.cnormal();
        const MatrixXcd zero = MatrixXcd::Zero(m, t);
        const LsfcErrorTerms terms =
            lsfc_error_decomposition(h.col(0), beta[0], zero, pilots, 0);
        CHECK(terms.noise_quadratic == doctest::Approx(-1.0 / pilots.energy(0)));
        CHECK(terms.cross == doctest::Approx(0.0));
    }

    SUBCASE("a hardened channel zeroes the fading term") {
        VectorXcd h = VectorXcd::Ones(m); // squared norm exactly m
        MatrixXcd noise(m, t);
        for (int c = 0; c < t; ++c)
            for (int r = 0; r < m; ++r)
                noise(r, c) = rng.cnormal();
        const LsfcErrorTerms terms = lsfc_error_decomposition(h, beta[0], noise, pilots, 0);
        CHECK(terms.hardening == doctest::Approx(0.0).epsilon(1e-14));
    }

    SUBCASE("the three terms add up to the estimation error") {
        for (int rep = 0; rep < 10; ++rep) {
            MatrixXcd h(m, users);
            for (int c = 0; c < users; ++c)
                for (int r = 0; r < m; ++r)
                    h(r, c) = rng.cnormal();
            MatrixXcd noise(m, t);
            for (int c = 0; c < t; ++c)
                for (int r = 0; r < m; ++r)
                    noise(r, c) = rng.cnormal();
            ReceivedBlock block;
            block.y = h * beta.cwiseSqrt().asDiagonal() * pilots.rows() + noise;
            const LsfcEstimate est = estimate_lsfc(block, pilots);
            for (int k = 0; k < users; ++k) {
                const LsfcErrorTerms terms =
                    lsfc_error_decomposition(h.col(k), beta[k], noise, pilots, k);
                CHECK(std::abs(terms.sum() - (est.beta_hat[k] - beta[k])) < 1e-10);
            }
        }
    }
}

TEST_CASE("fading-term variance follows the correlation energy law across sizes") {
    // Var{r2} = beta^2 ||Phi||_F^2 / M^2 for complex normal channels; checked
    // at two array sizes so the scaling, not just one point, is pinned.
    const double beta = 0.9;
    const PilotMatrix pilots = orthogonal_pilots(1, 2, 1.0);
    RngStream rng(18);
    for (int m : {50, 200}) {
        const CorrelationMatrix corr =
            correlation_from_profile(m, SpatialProfile::uniform_pas(0.3, 7.2 * kDeg, 0.5));
        const int trials = 20000;
        std::vector<double> r2(trials);
        const MatrixXcd zero_noise = MatrixXcd::Zero(m, 2);
        for (int i = 0; i < trials; ++i) {
            const MatrixXcd h = correlated_draw(corr, 1, rng);
            r2[i] = lsfc_error_decomposition(h.col(0), beta, zero_noise, pilots, 0).hardening;
        }
        const double expected = beta * beta * corr.phi().squaredNorm() / (double(m) * m);
        CHECK(oracle::stats_of(r2).variance == doctest::Approx(expected).epsilon(0.10));
    }
}

TEST_CASE("variance drops when the array doubles") {
    VectorXd beta = VectorXd::Constant(1, 1.0);
    RngStream rng(19);
    double previous = -1.0;
    for (int m : {32, 64, 128}) {
        const CorrelationMatrix corr = correlation_from_profile(
            m, SpatialProfile::uniform_pas(0.2, 15.0 * kDeg, 0.5));
        const PilotMatrix pilots =
            orthogonal_pilots(1, 2, power_for_target_snr(beta, 10.0));
        std::vector<double> draws(3000);
        for (double& d : draws) {
            const MatrixXcd h = correlated_draw(corr, 1, rng);
            const ReceivedBlock block = noisy_block(h, beta, pilots, rng);
            d = estimate_lsfc(block, pilots).beta_hat[0];
        }
        const double var = oracle::stats_of(draws).variance;
        if (previous > 0.0)
            CHECK(var < previous);
        previous = var;
    }
}

TEST_CASE("variance grows with the distance from the identity correlation") {
    // Sorted by ||Phi - I||_F, the sample variances must be non-decreasing.
    const int m = 64;
    VectorXd beta = VectorXd::Constant(1, 1.0);
    const PilotMatrix pilots = orthogonal_pilots(1, 2, power_for_target_snr(beta, 10.0));
    struct Point {
        double distance;
        double variance;
    };
    std::vector<Point> points;
    RngStream rng(20);
    std::vector<CorrelationMatrix> cases;
    cases.push_back(CorrelationMatrix::from_matrix(MatrixXcd::Identity(m, m)));
    for (double as : {60.0, 15.0, 7.2})
        cases.push_back(correlation_from_profile(
            m, SpatialProfile::uniform_pas(0.3, as * kDeg, 0.5)));
    for (const CorrelationMatrix& corr : cases) {
        std::vector<double> draws(5000);
        for (double& d : draws) {
            const MatrixXcd h = correlated_draw(corr, 1, rng);
            const ReceivedBlock block = noisy_block(h, beta, pilots, rng);
            d = estimate_lsfc(block, pilots).beta_hat[0];
        }
        points.push_back({(corr.phi() - MatrixXcd::Identity(m, m)).norm(),
                          oracle::stats_of(draws).variance});
    }
    std::sort(points.begin(), points.end(),
              [](const Point& a, const Point& b) { return a.distance < b.distance; });
    for (std::size_t i = 1; i < points.size(); ++i)
        CHECK(points[i].variance >= points[i - 1].variance);
}
