// SPDX-License-Identifier: Apache-2.0
#include "chanest/channel_model.hpp"

#include <cmath>
#include <complex>
#include <functional>

#include "chanest/errors.hpp"
#include "chanest/pilots.hpp"

namespace chanest {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using std::complex;

SystemDims::SystemDims(int antennas, int users, int pilots, int blocks)
    : n_antennas(antennas), n_users(users), pilot_len(pilots), n_blocks(blocks) {
    if (n_users < 1 || n_antennas < pilot_len || pilot_len < n_users)
        throw std::invalid_argument("SystemDims requires antennas >= pilot_len >= users >= 1");
    if (n_blocks < 1)
        throw std::invalid_argument("SystemDims requires at least one block");
}

LargeScaleParams::LargeScaleParams(double pathloss_exp_, double shadowing_db_,
                                   double cell_radius_m_, double min_distance_m_)
    : pathloss_exp(pathloss_exp_), shadowing_db(shadowing_db_),
      cell_radius_m(cell_radius_m_), min_distance_m(min_distance_m_) {
    if (!(pathloss_exp > 2.0))
        throw std::invalid_argument("pathloss exponent must exceed 2");
    if (shadowing_db < 0.0)
        throw std::invalid_argument("shadowing std dev cannot be negative");
    if (!(min_distance_m > 0.0) || !(cell_radius_m > min_distance_m))
        throw std::invalid_argument("cell radius must exceed the minimum distance");
}

double lsfc_gain(double distance_m, double shadow_db, double pathloss_exp) {
    return std::pow(10.0, shadow_db / 10.0) * std::pow(distance_m, -pathloss_exp);
}

LargeScaleRealization gen_lsfc(const SystemDims& dims, const LargeScaleParams& params,
                               RngStream& rng) {
    const int n = dims.n_users;
    LargeScaleRealization out;
    out.beta.resize(n);
    out.distances.resize(n);
    out.shadow_db.resize(n);
    const double r2_min = params.min_distance_m * params.min_distance_m;
    const double r2_max = params.cell_radius_m * params.cell_radius_m;
    for (int k = 0; k < n; ++k) {
        // Area-uniform placement on the annulus [min_distance, radius].
        out.distances[k] = std::sqrt(r2_min + rng.uniform() * (r2_max - r2_min));
        out.shadow_db[k] = params.shadowing_db * rng.normal();
        out.beta[k] = lsfc_gain(out.distances[k], out.shadow_db[k], params.pathloss_exp);
    }
    return out;
}

SpatialProfile SpatialProfile::uniform_pas(double mean_aoa_rad, double rms_spread_rad,
                                           double spacing_wavelengths) {
    SpatialProfile p;
    p.mean_aoa_rad = mean_aoa_rad;
    p.half_width_rad = std::sqrt(3.0) * rms_spread_rad;
    p.spacing_wavelengths = spacing_wavelengths;
    p.pas = PasKind::uniform;
    p.validate();
    return p;
}

SpatialProfile SpatialProfile::scm(double mean_aoa_rad, double rms_spread_rad,
                                   double spacing_wavelengths) {
    SpatialProfile p;
    p.mean_aoa_rad = mean_aoa_rad;
    p.half_width_rad = std::sqrt(3.0) * rms_spread_rad;
    p.spacing_wavelengths = spacing_wavelengths;
    p.pas = PasKind::scm_subpaths;
    p.validate();
    return p;
}

void SpatialProfile::validate() const {
    if (!(std::abs(mean_aoa_rad) <= M_PI / 2.0))
        throw std::invalid_argument("mean AoA must lie in [-pi/2, pi/2]");
    if (!(half_width_rad >= 0.0) || !std::isfinite(half_width_rad))
        throw std::invalid_argument("angle spread must be finite and non-negative");
    if (!(spacing_wavelengths >= 0.0) || !std::isfinite(spacing_wavelengths))
        throw std::invalid_argument("antenna spacing must be finite and non-negative");
    if (pas == PasKind::scm_subpaths && (n_paths != 1 || n_subpaths != 20))
        throw std::invalid_argument("subpath profile supports 1 path of 20 subpaths");
}

namespace {

constexpr double kEigClamp = 1e-10;

using ComplexFn = std::function<complex<double>(double)>;

complex<double> simpson_rule(double a, double b, complex<double> fa, complex<double> fm,
                             complex<double> fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

complex<double> adaptive_step(const ComplexFn& f, double a, double b,
                              complex<double> fa, complex<double> fm, complex<double> fb,
                              complex<double> whole, double tol, int depth) {
    if (depth > 60)
        throw numeric_error("adaptive quadrature failed to reach tolerance 1e-10");
    const double m = 0.5 * (a + b);
    const complex<double> flm = f(0.5 * (a + m));
    const complex<double> frm = f(0.5 * (m + b));
    const complex<double> left = simpson_rule(a, m, fa, flm, fm);
    const complex<double> right = simpson_rule(m, b, fm, frm, fb);
    const complex<double> err = left + right - whole;
    if (std::abs(err) <= 15.0 * tol)
        return left + right + err / 15.0;
    return adaptive_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
           adaptive_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
}

complex<double> integrate_adaptive(const ComplexFn& f, double a, double b, double tol) {
    const complex<double> fa = f(a);
    const complex<double> fb = f(b);
    const complex<double> fm = f(0.5 * (a + b));
    const complex<double> whole = simpson_rule(a, b, fa, fm, fb);
    return adaptive_step(f, a, b, fa, fm, fb, whole, tol, 0);
}

// Per-lag array correlation. The integrand exp(-j 2 pi lag xi sin(theta))
// comes from plane waves hitting a y-axis ULA.
VectorXcd lag_correlations(int n_antennas, const SpatialProfile& profile) {
    VectorXcd rho(n_antennas);
    const double spacing = profile.spacing_wavelengths;
    const double phi = profile.mean_aoa_rad;
    const double hw = profile.half_width_rad;

    if (profile.pas == PasKind::scm_subpaths) {
        // 3GPP SCM fixed subpath offsets; their RMS spread is exactly 2 degrees,
        // rescaled here to the requested spread.
        static const double base_offsets_deg[10] = {0.0894, 0.2826, 0.4984, 0.7431, 1.0257,
                                                    1.3594, 1.7688, 2.2961, 3.0389, 4.3101};
        const double rms_deg = (hw / std::sqrt(3.0)) * 180.0 / M_PI;
        const double scale = rms_deg / 2.0;
        for (int lag = 0; lag < n_antennas; ++lag) {
            complex<double> acc = 0.0;
            for (double off : base_offsets_deg) {
                const double d = off * scale * M_PI / 180.0;
                const double arg_p = -2.0 * M_PI * lag * spacing * std::sin(phi + d);
                const double arg_m = -2.0 * M_PI * lag * spacing * std::sin(phi - d);
                acc += std::polar(1.0, arg_p) + std::polar(1.0, arg_m);
            }
            rho[lag] = acc / 20.0;
        }
        return rho;
    }

    if (hw <= 1e-14) {
        // Point source: the spectrum collapses onto the mean angle.
        for (int lag = 0; lag < n_antennas; ++lag)
            rho[lag] = std::polar(1.0, -2.0 * M_PI * lag * spacing * std::sin(phi));
        return rho;
    }

    const double norm = 1.0 / (2.0 * hw);
    for (int lag = 0; lag < n_antennas; ++lag) {
        if (lag == 0) {
            rho[0] = 1.0;
            continue;
        }
        const double a = 2.0 * M_PI * lag * spacing;
        auto f = [a](double theta) { return std::polar(1.0, -a * std::sin(theta)); };
        rho[lag] = norm * integrate_adaptive(f, phi - hw, phi + hw, 1e-10);
    }
    return rho;
}

MatrixXcd hermitian_toeplitz(const VectorXcd& rho) {
    const int n = static_cast<int>(rho.size());
    MatrixXcd out(n, n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const int lag = i - j;
            out(i, j) = lag >= 0 ? rho[lag] : std::conj(rho[-lag]);
        }
    }
    return out;
}

} // namespace

CorrelationMatrix CorrelationMatrix::from_matrix(MatrixXcd phi) {
    if (phi.rows() != phi.cols() || phi.rows() < 1)
        throw std::invalid_argument("correlation matrix must be square and non-empty");
    const int n = static_cast<int>(phi.rows());

    MatrixXcd sym = 0.5 * (phi + phi.adjoint());
    if ((sym - phi).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, phi.cwiseAbs().maxCoeff()))
        throw std::invalid_argument("correlation matrix is not Hermitian");
    for (int i = 0; i < n; ++i) {
        if (std::abs(sym(i, i).real() - 1.0) > 1e-10 || std::abs(sym(i, i).imag()) > 1e-10)
            throw std::invalid_argument("correlation matrix must have a unit diagonal");
        sym(i, i) = 1.0;
    }

    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(sym);
    if (es.info() != Eigen::Success)
        throw numeric_error("eigendecomposition of the correlation matrix failed");
    VectorXd vals = es.eigenvalues();
    if (vals.minCoeff() < -kEigClamp)
        throw std::invalid_argument("correlation matrix has a significantly negative eigenvalue");
    for (int i = 0; i < n; ++i)
        vals[i] = vals[i] < kEigClamp ? 0.0 : vals[i];

    CorrelationMatrix out;
    out.phi_ = std::move(sym);
    out.sqrt_ = es.eigenvectors() * vals.cwiseSqrt().asDiagonal() *
                es.eigenvectors().adjoint();
    out.eigenvalues_ = vals.reverse();

    const double residual = (out.sqrt_ * out.sqrt_.adjoint() - out.phi_).norm();
    if (residual > 1e-8)
        throw numeric_error("matrix square root residual exceeds 1e-8");
    return out;
}

CorrelationMatrix correlation_from_profile(int n_antennas, const SpatialProfile& profile) {
    profile.validate();
    if (n_antennas < 1)
        throw std::invalid_argument("antenna count must be positive");
    return CorrelationMatrix::from_matrix(hermitian_toeplitz(lag_correlations(n_antennas, profile)));
}

Eigen::MatrixXcd scm_subpath_factor(int n_antennas, const SpatialProfile& profile) {
    profile.validate();
    if (profile.pas != PasKind::scm_subpaths)
        throw std::invalid_argument("subpath factor requires an scm_subpaths profile");
    static const double base_offsets_deg[10] = {0.0894, 0.2826, 0.4984, 0.7431, 1.0257,
                                                1.3594, 1.7688, 2.2961, 3.0389, 4.3101};
    const double rms_deg = (profile.half_width_rad / std::sqrt(3.0)) * 180.0 / M_PI;
    const double scale = rms_deg / 2.0;
    MatrixXcd factor(n_antennas, 20);
    int col = 0;
    for (double off : base_offsets_deg) {
        for (double sign : {1.0, -1.0}) {
            const double angle = profile.mean_aoa_rad + sign * off * scale * M_PI / 180.0;
            factor.col(col++) =
                steering_vector(n_antennas, angle, profile.spacing_wavelengths) / std::sqrt(20.0);
        }
    }
    return factor;
}

SteeringDiagonal steering_diag(int n_antennas, double angle_rad, double spacing_wavelengths) {
    if (!(std::abs(angle_rad) <= M_PI / 2.0))
        throw std::invalid_argument("steering angle must lie in [-pi/2, pi/2]");
    SteeringDiagonal w;
    w.angle_rad = angle_rad;
    w.spacing_wavelengths = spacing_wavelengths;
    w.entries = steering_vector(n_antennas, angle_rad, spacing_wavelengths);
    return w;
}

Eigen::VectorXcd steering_vector(int n_antennas, double angle_rad, double spacing_wavelengths) {
    VectorXcd v(n_antennas);
    const double step = -2.0 * M_PI * spacing_wavelengths * std::sin(angle_rad);
    for (int i = 0; i < n_antennas; ++i)
        v[i] = std::polar(1.0, step * i);
    return v;
}

SmallScaleRealization gen_ssfc(const std::vector<CorrelationMatrix>& correlations,
                               RngStream& rng) {
    if (correlations.empty())
        throw std::invalid_argument("at least one correlation matrix is required");
    const int m = correlations.front().dim();
    const int k = static_cast<int>(correlations.size());
    SmallScaleRealization out;
    out.h_tilde.resize(m, k);
    out.h.resize(m, k);
    for (int u = 0; u < k; ++u) {
        if (correlations[u].dim() != m)
            throw std::invalid_argument("correlation matrices must share dimensions");
        for (int i = 0; i < m; ++i)
            out.h_tilde(i, u) = rng.cnormal();
        out.h.col(u) = correlations[u].sqrt() * out.h_tilde.col(u);
    }
    return out;
}

Eigen::MatrixXcd sample_channels(const std::vector<Eigen::MatrixXcd>& factors,
                                 RngStream& rng) {
    if (factors.empty())
        throw std::invalid_argument("at least one channel factor is required");
    const int m = static_cast<int>(factors.front().rows());
    MatrixXcd h(m, factors.size());
    for (std::size_t u = 0; u < factors.size(); ++u) {
        if (factors[u].rows() != m)
            throw std::invalid_argument("channel factors must share the antenna dimension");
        VectorXcd g(factors[u].cols());
        for (int i = 0; i < g.size(); ++i)
            g[i] = rng.cnormal();
        h.col(u) = factors[u] * g;
    }
    return h;
}

ReceivedBlock received_block(const Eigen::MatrixXcd& h, const Eigen::VectorXd& beta,
                             const PilotMatrix& pilots, double noise_power,
                             RngStream& rng) {
    const int m = static_cast<int>(h.rows());
    const int k = static_cast<int>(h.cols());
    const int t = pilots.pilot_len();
    if (beta.size() != k || pilots.n_users() != k)
        throw std::invalid_argument("channel, gains and pilots disagree on the user count");
    if (noise_power < 0.0)
        throw std::invalid_argument("noise power cannot be negative");

    ReceivedBlock out;
    out.y.noalias() = h * beta.cwiseSqrt().asDiagonal() * pilots.rows();
    if (noise_power > 0.0) {
        const double scale = std::sqrt(noise_power);
        for (int j = 0; j < t; ++j)
            for (int i = 0; i < m; ++i)
                out.y(i, j) += scale * rng.cnormal();
    }
    return out;
}

} // namespace chanest
