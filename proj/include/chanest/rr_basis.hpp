// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <memory>

#include "chanest/channel_model.hpp"

namespace chanest {

enum class BasisKind { polynomial, dct2, klt };

// Unitary reduction basis: the leading `order` columns of a full M x M parent
// whose columns follow the kind's canonical order (ascending polynomial
// degree, ascending cosine frequency, descending eigenvalue). The parent is
// kept alive so analyses can reach the discarded columns.
class RrBasis {
public:
    RrBasis(std::shared_ptr<const Eigen::MatrixXcd> parent, BasisKind kind, int order);

    int order() const { return order_; }
    int dim() const { return static_cast<int>(parent_->rows()); }
    BasisKind kind() const { return kind_; }

    // M x order view of the retained columns.
    Eigen::Block<const Eigen::MatrixXcd, Eigen::Dynamic, Eigen::Dynamic, true> retained()
        const {
        return parent_->leftCols(order_);
    }
    const Eigen::MatrixXcd& parent() const { return *parent_; }

    // Same parent, different modeling order.
    RrBasis with_order(int order) const { return RrBasis(parent_, kind_, order); }

private:
    std::shared_ptr<const Eigen::MatrixXcd> parent_;
    BasisKind kind_;
    int order_;
};

// Orthonormal discrete polynomials on the array index grid; column j spans
// polynomials of degree <= j-1. Parents are cached per array size.
RrBasis polynomial_basis(int n_antennas, int order);

// Type-2 DCT basis; column 1 is the constant vector. Parents are cached.
RrBasis dct2_basis(int n_antennas, int order);

// Channel-dependent reference basis: eigenvectors of the correlation, or of
// the steered correlation W^H Phi W when an alignment is given, sorted by
// descending eigenvalue.
RrBasis klt_basis(const CorrelationMatrix& correlation, const SteeringDiagonal* alignment,
                  int order);

const char* basis_kind_name(BasisKind kind);

} // namespace chanest
