// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "chanest/rng.hpp"

namespace chanest {

class PilotMatrix;

// Dimensions of one uplink training setup.
struct SystemDims {
    int n_antennas;  // BS array size M
    int n_users;     // single-antenna mobiles K
    int pilot_len;   // training length T, T >= K
    int n_blocks;    // coherence blocks J sharing one large-scale state

    SystemDims(int antennas, int users, int pilots, int blocks = 1);
};

// Pathloss / shadowing model parameters for users dropped in a circular cell.
struct LargeScaleParams {
    double pathloss_exp;      // > 2
    double shadowing_db;      // std dev of log-normal shadowing, dB (>= 0)
    double cell_radius_m;     // > min_distance_m
    double min_distance_m;    // keeps the pathloss bounded

    LargeScaleParams(double pathloss_exp, double shadowing_db, double cell_radius_m,
                     double min_distance_m = 1.0);
};

// One draw of the slowly varying link gains.
struct LargeScaleRealization {
    Eigen::VectorXd beta;       // per-user gain, shadowing x pathloss
    Eigen::VectorXd distances;  // meters
    Eigen::VectorXd shadow_db;
};

// Gain of a single link: 10^(shadow_db/10) * d^(-alpha).
double lsfc_gain(double distance_m, double shadow_db, double pathloss_exp);

// Users placed area-uniformly in the cell annulus [min_distance, radius],
// shadowing N(0, sigma^2) in dB.
LargeScaleRealization gen_lsfc(const SystemDims& dims, const LargeScaleParams& params,
                               RngStream& rng);

enum class PasKind { uniform, scm_subpaths };

// Azimuth power profile of one user's uplink as seen by the array.
//
// half_width_rad is the half width of the uniform power azimuth spectrum
// around the mean angle of arrival; the RMS angle spread is half_width/sqrt(3).
// The scm_subpaths mode replaces the continuous spectrum by one path of
// n_subpaths equal-power rays at fixed offsets scaled to the same RMS spread.
struct SpatialProfile {
    double mean_aoa_rad = 0.0;        // in [-pi/2, pi/2]
    double half_width_rad = 0.0;      // >= 0
    double spacing_wavelengths = 0.5; // element spacing over wavelength, > 0
    PasKind pas = PasKind::uniform;
    int n_paths = 1;
    int n_subpaths = 20;

    static SpatialProfile uniform_pas(double mean_aoa_rad, double rms_spread_rad,
                                      double spacing_wavelengths);
    static SpatialProfile scm(double mean_aoa_rad, double rms_spread_rad,
                              double spacing_wavelengths);

    void validate() const;
};

// Receive-side spatial correlation with its Hermitian square root.
// Construction symmetrizes, clamps eigenvalues below 1e-10 at zero and
// checks sqrt() * sqrt()^H against phi().
class CorrelationMatrix {
public:
    static CorrelationMatrix from_matrix(Eigen::MatrixXcd phi);

    const Eigen::MatrixXcd& phi() const { return phi_; }
    const Eigen::MatrixXcd& sqrt() const { return sqrt_; }
    // Clamped spectrum in descending order.
    const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
    int dim() const { return static_cast<int>(phi_.rows()); }

private:
    CorrelationMatrix() = default;
    Eigen::MatrixXcd phi_;
    Eigen::MatrixXcd sqrt_;
    Eigen::VectorXd eigenvalues_;
};

// Correlation of a uniform linear array on the y-axis for the given profile.
// Uniform profiles integrate the arrival spectrum by adaptive quadrature
// (tolerance 1e-10); subpath profiles sum the discrete rays in closed form.
CorrelationMatrix correlation_from_profile(int n_antennas, const SpatialProfile& profile);

// Tall factor F (M x n_subpaths) with F F^H equal to the scm_subpaths
// correlation; drawing h = F g with g ~ CN(0, I) samples the same law at a
// fraction of the eigendecomposition cost.
Eigen::MatrixXcd scm_subpath_factor(int n_antennas, const SpatialProfile& profile);

// Diagonal of unit-modulus phase ramps exp(-j 2 pi (i-1) xi/lambda sin(phi)).
struct SteeringDiagonal {
    double angle_rad = 0.0;
    double spacing_wavelengths = 0.5;
    Eigen::VectorXcd entries;
};

SteeringDiagonal steering_diag(int n_antennas, double angle_rad, double spacing_wavelengths);

// Steering column vector: same entries as the diagonal.
Eigen::VectorXcd steering_vector(int n_antennas, double angle_rad, double spacing_wavelengths);

// Fast-fading state: white columns and their correlated images.
struct SmallScaleRealization {
    Eigen::MatrixXcd h_tilde; // M x K, i.i.d. CN(0,1)
    Eigen::MatrixXcd h;       // column k = sqrt_k * h_tilde_k
};

SmallScaleRealization gen_ssfc(const std::vector<CorrelationMatrix>& correlations,
                               RngStream& rng);

// Draws an M x K channel with column k ~ CN(0, F_k F_k^H) from per-user
// factors (square roots or subpath factors).
Eigen::MatrixXcd sample_channels(const std::vector<Eigen::MatrixXcd>& factors,
                                 RngStream& rng);

// One pilot-interval observation Y = H Diag(beta)^(1/2) P + N.
struct ReceivedBlock {
    Eigen::MatrixXcd y;             // M x T
    std::uint64_t noise_stream = 0; // informational stream tag
};

ReceivedBlock received_block(const Eigen::MatrixXcd& h, const Eigen::VectorXd& beta,
                             const PilotMatrix& pilots, double noise_power,
                             RngStream& rng);

} // namespace chanest
