// SPDX-License-Identifier: Apache-2.0
#include "chanest/rr_basis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "chanest/errors.hpp"

namespace chanest {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXd;

RrBasis::RrBasis(std::shared_ptr<const MatrixXcd> parent, BasisKind kind, int order)
    : parent_(std::move(parent)), kind_(kind), order_(order) {
    if (!parent_ || parent_->rows() != parent_->cols())
        throw std::invalid_argument("basis parent must be a square matrix");
    if (order_ < 1 || order_ > parent_->rows())
        throw std::invalid_argument("modeling order must lie in [1, M]");
}

namespace {

// The monomial Vandermonde matrix is numerically rank deficient long before
// M = 100, so a straight QR cannot deliver orthonormal columns. Instead each
// new column is generated by multiplying the previous one with the grid
// coordinate and re-orthogonalizing twice against everything built so far
// (Lanczos with full reorthogonalization). Column j is still a polynomial of
// degree exactly j-1 on the grid, and orthonormality holds to machine
// precision for any M.
MatrixXd discrete_polynomials(int m) {
    MatrixXd q(m, m);
    VectorXd x(m);
    for (int i = 0; i < m; ++i)
        x[i] = m == 1 ? 0.0 : -1.0 + 2.0 * i / (m - 1.0);

    q.col(0).setConstant(1.0 / std::sqrt(static_cast<double>(m)));
    for (int j = 1; j < m; ++j) {
        VectorXd v = x.cwiseProduct(q.col(j - 1));
        for (int pass = 0; pass < 2; ++pass)
            v -= q.leftCols(j) * (q.leftCols(j).transpose() * v).eval();
        const double norm = v.norm();
        if (!(norm > 0.0))
            throw numeric_error("polynomial basis construction broke down");
        v /= norm;
        if (v[m - 1] < 0.0)
            v = -v;
        q.col(j) = v;
    }
    return q;
}

MatrixXd dct2_matrix(int m) {
    MatrixXd q(m, m);
    for (int j = 0; j < m; ++j) {
        const double scale = j == 0 ? std::sqrt(1.0 / m) : std::sqrt(2.0 / m);
        for (int i = 0; i < m; ++i)
            q(i, j) = scale * std::cos(M_PI * (2.0 * i + 1.0) * j / (2.0 * m));
    }
    return q;
}

std::shared_ptr<const MatrixXcd> cached_parent(BasisKind kind, int m) {
    static std::mutex mutex;
    static std::map<std::pair<int, int>, std::shared_ptr<const MatrixXcd>> cache;
    const std::pair<int, int> key{static_cast<int>(kind), m};
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(key);
    if (it != cache.end())
        return it->second;
    MatrixXd real = kind == BasisKind::polynomial ? discrete_polynomials(m) : dct2_matrix(m);
    auto parent = std::make_shared<const MatrixXcd>(real.cast<std::complex<double>>());
    cache.emplace(key, parent);
    return parent;
}

} // namespace

RrBasis polynomial_basis(int n_antennas, int order) {
    if (n_antennas < 1)
        throw std::invalid_argument("antenna count must be positive");
    return RrBasis(cached_parent(BasisKind::polynomial, n_antennas), BasisKind::polynomial,
                   order);
}

RrBasis dct2_basis(int n_antennas, int order) {
    if (n_antennas < 1)
        throw std::invalid_argument("antenna count must be positive");
    return RrBasis(cached_parent(BasisKind::dct2, n_antennas), BasisKind::dct2, order);
}

RrBasis klt_basis(const CorrelationMatrix& correlation, const SteeringDiagonal* alignment,
                  int order) {
    const int m = correlation.dim();
    MatrixXcd target = correlation.phi();
    if (alignment != nullptr) {
        if (alignment->entries.size() != m)
            throw std::invalid_argument("alignment and correlation disagree on dimensions");
        target = alignment->entries.conjugate().asDiagonal() * target;
        target = target * alignment->entries.asDiagonal();
    }
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(0.5 * (target + target.adjoint()));
    if (es.info() != Eigen::Success)
        throw numeric_error("KLT eigendecomposition failed");

    // Descending eigenvalue; ties keep ascending solver index for determinism.
    const int n = static_cast<int>(es.eigenvalues().size());
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        return es.eigenvalues()[a] > es.eigenvalues()[b];
    });
    MatrixXcd parent(m, m);
    for (int j = 0; j < n; ++j)
        parent.col(j) = es.eigenvectors().col(idx[j]);
    return RrBasis(std::make_shared<const MatrixXcd>(std::move(parent)), BasisKind::klt,
                   order);
}

const char* basis_kind_name(BasisKind kind) {
    switch (kind) {
    case BasisKind::polynomial: return "poly";
    case BasisKind::dct2: return "dct";
    case BasisKind::klt: return "klt";
    }
    return "?";
}

} // namespace chanest
