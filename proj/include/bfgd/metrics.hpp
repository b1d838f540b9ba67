#pragma once

#include <cstdint>
#include <span>

#include "bfgd/dense_matrix.hpp"
#include "bfgd/factor_pair.hpp"
#include "bfgd/observations.hpp"

namespace bfgd {

/// Reference solution for distance metrics: the target matrix, its best
/// rank-r approximation, and the balanced factor split u* = A sqrt(S),
/// v* = B sqrt(S) of that approximation.
struct GroundTruth {
    DenseMatrix x_star;
    std::size_t rank = 0;
    DenseMatrix x_star_r;  // best rank-r approximation of x_star
    FactorPair balanced;
};

GroundTruth make_ground_truth(DenseMatrix x_star, std::size_t rank, std::uint64_t seed = 0);

/// Minimal stacked-Frobenius distance from [u; v] to the set of balanced
/// factorizations of x_star_r. The set is a single orthogonal orbit, so the
/// minimum is computed exactly by one r x r orthogonal Procrustes solve.
double procrustes_dist(const FactorPair& pair, const GroundTruth& truth);

/// ||x_hat - x_star||_F / ||x_star||_F.
double relative_error(const DenseMatrix& x_hat, const DenseMatrix& x_star);

/// Fraction of test entries whose sign x_hat agrees with; sign(0) counts
/// as +1.
double sign_accuracy(const DenseMatrix& x_hat, std::span<const SignObservation> test_set);

/// 10 log10(peak^2 / MSE) in dB; +infinity when the MSE is zero.
double psnr(const DenseMatrix& x_hat, const DenseMatrix& reference, double peak = 255.0);

/// sigma_1(u) / sigma_r(u) from the eigenvalues of u'u; +infinity when
/// sigma_r vanishes.
double condition_ratio(const DenseMatrix& u);

}  // namespace bfgd
