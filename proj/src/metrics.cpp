#include "bfgd/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "bfgd/linalg.hpp"

namespace bfgd {

GroundTruth make_ground_truth(DenseMatrix x_star, std::size_t rank, std::uint64_t seed) {
    if (rank < 1 || rank > std::min(x_star.rows(), x_star.cols()))
        throw std::invalid_argument("make_ground_truth: rank out of range");
    const SvdResult svd = truncated_svd(x_star, rank, 10, 8, seed);

    GroundTruth truth;
    truth.rank = rank;
    truth.x_star_r = svd.reconstruct();
    DenseMatrix u = svd.left;
    DenseMatrix v = svd.right;
    for (std::size_t j = 0; j < rank; ++j) {
        const double root = std::sqrt(svd.singulars[j]);
        for (std::size_t i = 0; i < u.rows(); ++i) u(i, j) *= root;
        for (std::size_t i = 0; i < v.rows(); ++i) v(i, j) *= root;
    }
    truth.balanced = FactorPair{std::move(u), std::move(v)};
    truth.x_star = std::move(x_star);
    return truth;
}

double procrustes_dist(const FactorPair& pair, const GroundTruth& truth) {
    if (pair.rank() != truth.rank)
        throw std::invalid_argument("procrustes_dist: rank mismatch");
    if (pair.u.rows() != truth.balanced.u.rows() || pair.v.rows() != truth.balanced.v.rows())
        throw std::invalid_argument("procrustes_dist: dimension mismatch");

    const DenseMatrix w = pair.stacked();
    const DenseMatrix w_star = truth.balanced.stacked();
    // The balanced optimal set is {W* R : R orthogonal}; the closest rotation
    // is the polar factor of W*' W.
    const SvdResult polar = svd_small(matmul_at_b(w_star, w));
    const DenseMatrix rotation = matmul_a_bt(polar.left, polar.right);
    return frobenius_norm(sub(w, matmul(w_star, rotation)));
}

double relative_error(const DenseMatrix& x_hat, const DenseMatrix& x_star) {
    if (x_hat.rows() != x_star.rows() || x_hat.cols() != x_star.cols())
        throw std::invalid_argument("relative_error: shape mismatch");
    const double denom = frobenius_norm(x_star);
    if (denom == 0.0) throw std::invalid_argument("relative_error: zero reference");
    return frobenius_norm(sub(x_hat, x_star)) / denom;
}

double sign_accuracy(const DenseMatrix& x_hat, std::span<const SignObservation> test_set) {
    if (test_set.empty()) throw std::invalid_argument("sign_accuracy: empty test set");
    std::size_t hits = 0;
    for (const auto& o : test_set) {
        const int predicted = x_hat(o.row, o.col) >= 0.0 ? 1 : -1;
        if (predicted == o.label) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(test_set.size());
}

double psnr(const DenseMatrix& x_hat, const DenseMatrix& reference, double peak) {
    if (x_hat.rows() != reference.rows() || x_hat.cols() != reference.cols())
        throw std::invalid_argument("psnr: shape mismatch");
    if (!(peak > 0.0)) throw std::invalid_argument("psnr: peak must be positive");
    double mse = 0.0;
    const double* a = x_hat.data().data();
    const double* b = reference.data().data();
    for (std::size_t i = 0; i < x_hat.size(); ++i) {
        const double d = a[i] - b[i];
        mse += d * d;
    }
    mse /= static_cast<double>(x_hat.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

double condition_ratio(const DenseMatrix& u) {
    const SvdResult gram = svd_small(matmul_at_b(u, u));
    const double largest = gram.singulars.front();
    const double smallest = gram.singulars.back();
    if (smallest <= 0.0) return std::numeric_limits<double>::infinity();
    return std::sqrt(largest / smallest);
}

}  // namespace bfgd
