#pragma once

#include "bfgd/dense_matrix.hpp"

namespace bfgd {

/// The iterate of factored descent: u is m x r, v is n x r, and the point
/// being optimized is u * v'.
struct FactorPair {
    DenseMatrix u;
    DenseMatrix v;

    std::size_t rank() const { return u.cols(); }

    /// u * v'.
    DenseMatrix product() const { return matmul_a_bt(u, v); }

    /// The stacked (m+n) x r matrix [u; v].
    DenseMatrix stacked() const { return vstack(u, v); }

    /// ||u'u - v'v||_F, zero exactly when the factorization is balanced.
    double balance_residual() const {
        return frobenius_norm(sub(matmul_at_b(u, u), matmul_at_b(v, v)));
    }
};

}  // namespace bfgd
