#pragma once

#include <cstdint>
#include <vector>

#include "bfgd/dense_matrix.hpp"

namespace bfgd {

/// Thin SVD factors: a = left * diag(singulars) * right'.
/// Columns of left/right are orthonormal; singulars are nonincreasing and
/// nonnegative. Each left singular vector has its largest-magnitude entry
/// made nonnegative (the paired right vector is flipped with it).
struct SvdResult {
    DenseMatrix left;                // m x k
    std::vector<double> singulars;   // length k
    DenseMatrix right;               // n x k

    DenseMatrix reconstruct() const;
};

struct QrResult {
    DenseMatrix q;  // m x n, orthonormal columns
    DenseMatrix r;  // n x n, upper triangular, nonnegative diagonal
};

/// Householder thin QR for rows >= cols. Rank-deficient input yields zero
/// diagonal entries in r; q stays orthonormal.
QrResult qr_thin(const DenseMatrix& a);

/// Dense full SVD by one-sided Jacobi. Intended for small factors;
/// min(rows, cols) must not exceed kSvdSmallCap.
SvdResult svd_small(const DenseMatrix& a);

inline constexpr std::size_t kSvdSmallCap = 64;

/// Rank-r SVD by randomized subspace iteration: Gaussian test matrix,
/// QR re-orthonormalization after every power pass. Exact (to roundoff)
/// when rank(a) <= r; otherwise approximates the dominant subspace.
SvdResult truncated_svd(const DenseMatrix& a, std::size_t rank,
                        std::size_t power_iters = 10, std::size_t oversample = 8,
                        std::uint64_t seed = 0);

/// Largest singular value by power iteration on a'a, relative tolerance
/// tol, capped at 500 iterations. Zero matrix returns 0.
double spectral_norm(const DenseMatrix& a, double tol = 1e-6);

}  // namespace bfgd
