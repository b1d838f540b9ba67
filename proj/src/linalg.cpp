#include "bfgd/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "bfgd/rng.hpp"

namespace bfgd {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double column_dot(const DenseMatrix& a, std::size_t p, std::size_t q) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) s += a(i, p) * a(i, q);
    return s;
}

void rotate_columns(DenseMatrix& a, std::size_t p, std::size_t q, double c, double s) {
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double ap = a(i, p), aq = a(i, q);
        a(i, p) = c * ap - s * aq;
        a(i, q) = s * ap + c * aq;
    }
}

/// Appends an orthonormal column to u at position j, orthogonal to columns
/// [0, j). Picks the standard basis vector with the largest residual and
/// re-orthogonalizes twice.
void complete_orthonormal_column(DenseMatrix& u, std::size_t j) {
    const std::size_t m = u.rows();
    std::vector<double> best(m, 0.0);
    double best_norm = -1.0;
    for (std::size_t cand = 0; cand < m; ++cand) {
        std::vector<double> v(m, 0.0);
        v[cand] = 1.0;
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t k = 0; k < j; ++k) {
                double proj = 0.0;
                for (std::size_t i = 0; i < m; ++i) proj += v[i] * u(i, k);
                for (std::size_t i = 0; i < m; ++i) v[i] -= proj * u(i, k);
            }
        }
        double nrm = 0.0;
        for (double x : v) nrm += x * x;
        nrm = std::sqrt(nrm);
        if (nrm > best_norm) {
            best_norm = nrm;
            best = std::move(v);
        }
        if (best_norm > 0.5) break;  // good enough, basis vector nearly unused
    }
    for (std::size_t i = 0; i < m; ++i) u(i, j) = best[i] / best_norm;
}

/// One-sided Jacobi SVD of a tall matrix (rows >= cols). Rotates column
/// pairs until all cross products vanish relative to the column norms.
SvdResult jacobi_svd_tall(const DenseMatrix& a) {
    const std::size_t m = a.rows(), n = a.cols();
    DenseMatrix b = a;
    DenseMatrix v = DenseMatrix::identity(n);

    const std::size_t max_sweeps = 60;
    const double tol = 1e-14;
    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double app = column_dot(b, p, p);
                const double aqq = column_dot(b, q, q);
                const double apq = column_dot(b, p, q);
                if (std::fabs(apq) <= tol * std::sqrt(app * aqq) || apq == 0.0) continue;
                const double zeta = (aqq - app) / (2.0 * apq);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                rotate_columns(b, p, q, c, s);
                rotate_columns(v, p, q, c, s);
                rotated = true;
            }
        }
        if (!rotated) break;
    }

    std::vector<double> sigma(n);
    for (std::size_t j = 0; j < n; ++j) sigma[j] = std::sqrt(column_dot(b, j, j));

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return sigma[i] > sigma[j]; });

    SvdResult out;
    out.left = DenseMatrix(m, n);
    out.right = DenseMatrix(n, n);
    out.singulars.resize(n);
    const double rank_tol = std::max(m, n) * kEps * (sigma[order[0]] > 0 ? sigma[order[0]] : 1.0);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t src = order[j];
        const double s = sigma[src];
        if (s > rank_tol) {
            out.singulars[j] = s;
            for (std::size_t i = 0; i < m; ++i) out.left(i, j) = b(i, src) / s;
        } else {
            out.singulars[j] = 0.0;
            complete_orthonormal_column(out.left, j);
        }
        for (std::size_t i = 0; i < n; ++i) out.right(i, j) = v(i, src);
    }
    return out;
}

void apply_sign_convention(SvdResult& svd) {
    for (std::size_t j = 0; j < svd.singulars.size(); ++j) {
        std::size_t arg = 0;
        double best = -1.0;
        for (std::size_t i = 0; i < svd.left.rows(); ++i) {
            const double mag = std::fabs(svd.left(i, j));
            if (mag > best) {
                best = mag;
                arg = i;
            }
        }
        if (svd.left(arg, j) < 0.0) {
            for (std::size_t i = 0; i < svd.left.rows(); ++i) svd.left(i, j) = -svd.left(i, j);
            for (std::size_t i = 0; i < svd.right.rows(); ++i) svd.right(i, j) = -svd.right(i, j);
        }
    }
}

SvdResult jacobi_svd(const DenseMatrix& a) {
    SvdResult out;
    if (a.rows() >= a.cols()) {
        out = jacobi_svd_tall(a);
    } else {
        SvdResult t = jacobi_svd_tall(transpose(a));
        out.left = std::move(t.right);
        out.right = std::move(t.left);
        out.singulars = std::move(t.singulars);
    }
    apply_sign_convention(out);
    return out;
}

}  // namespace

DenseMatrix SvdResult::reconstruct() const {
    DenseMatrix scaled = left;
    for (std::size_t i = 0; i < scaled.rows(); ++i)
        for (std::size_t j = 0; j < scaled.cols(); ++j) scaled(i, j) *= singulars[j];
    return matmul_a_bt(scaled, right);
}

QrResult qr_thin(const DenseMatrix& a) {
    const std::size_t m = a.rows(), n = a.cols();
    if (m < n) throw std::invalid_argument("qr_thin: requires rows >= cols");

    DenseMatrix work = a;
    // Householder vectors are stored column by column; beta holds the scalar
    // coefficients. A zero column produces a skipped (identity) reflector.
    std::vector<std::vector<double>> vs(n);
    std::vector<double> betas(n, 0.0);

    for (std::size_t k = 0; k < n; ++k) {
        double norm2 = 0.0;
        for (std::size_t i = k; i < m; ++i) norm2 += work(i, k) * work(i, k);
        const double norm = std::sqrt(norm2);
        if (norm == 0.0) continue;

        std::vector<double> v(m - k, 0.0);
        const double x0 = work(k, k);
        const double alpha = (x0 >= 0.0 ? -norm : norm);
        v[0] = x0 - alpha;
        for (std::size_t i = k + 1; i < m; ++i) v[i - k] = work(i, k);
        double vnorm2 = 0.0;
        for (double x : v) vnorm2 += x * x;
        if (vnorm2 == 0.0) continue;
        const double beta = 2.0 / vnorm2;

        for (std::size_t j = k; j < n; ++j) {
            double dot = 0.0;
            for (std::size_t i = k; i < m; ++i) dot += v[i - k] * work(i, j);
            const double factor = beta * dot;
            for (std::size_t i = k; i < m; ++i) work(i, j) -= factor * v[i - k];
        }
        vs[k] = std::move(v);
        betas[k] = beta;
    }

    DenseMatrix r(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) r(i, j) = work(i, j);

    // Q = H_0 ... H_{n-1} * [I_n; 0], built by applying reflectors backwards.
    DenseMatrix q(m, n);
    for (std::size_t j = 0; j < n; ++j) q(j, j) = 1.0;
    for (std::size_t k = n; k-- > 0;) {
        if (vs[k].empty()) continue;
        const auto& v = vs[k];
        const double beta = betas[k];
        for (std::size_t j = 0; j < n; ++j) {
            double dot = 0.0;
            for (std::size_t i = k; i < m; ++i) dot += v[i - k] * q(i, j);
            const double factor = beta * dot;
            for (std::size_t i = k; i < m; ++i) q(i, j) -= factor * v[i - k];
        }
    }

    for (std::size_t k = 0; k < n; ++k) {
        if (r(k, k) < 0.0) {
            for (std::size_t j = k; j < n; ++j) r(k, j) = -r(k, j);
            for (std::size_t i = 0; i < m; ++i) q(i, k) = -q(i, k);
        }
    }
    return {std::move(q), std::move(r)};
}

SvdResult svd_small(const DenseMatrix& a) {
    if (std::min(a.rows(), a.cols()) > kSvdSmallCap)
        throw std::invalid_argument("svd_small: min dimension exceeds cap");
    return jacobi_svd(a);
}

SvdResult truncated_svd(const DenseMatrix& a, std::size_t rank,
                        std::size_t power_iters, std::size_t oversample,
                        std::uint64_t seed) {
    const std::size_t m = a.rows(), n = a.cols();
    if (rank < 1 || rank > std::min(m, n))
        throw std::invalid_argument("truncated_svd: rank out of range");

    const std::size_t sketch = std::min(rank + oversample, std::min(m, n));
    Rng rng(Rng::derive(seed, 0x75d7ULL));
    DenseMatrix test = gaussian_matrix(rng, n, sketch);

    DenseMatrix q = qr_thin(matmul(a, test)).q;
    for (std::size_t pass = 0; pass < power_iters; ++pass) {
        DenseMatrix z = qr_thin(matmul_at_b(a, q)).q;  // n x sketch
        q = qr_thin(matmul(a, z)).q;
    }

    DenseMatrix b = matmul_at_b(q, a);  // sketch x n
    SvdResult core = jacobi_svd(b);

    SvdResult out;
    out.left = DenseMatrix(m, rank);
    out.right = DenseMatrix(n, rank);
    out.singulars.assign(core.singulars.begin(), core.singulars.begin() + rank);
    DenseMatrix lifted = matmul(q, core.left);  // m x sketch
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < rank; ++j) out.left(i, j) = lifted(i, j);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < rank; ++j) out.right(i, j) = core.right(i, j);
    apply_sign_convention(out);
    return out;
}

double spectral_norm(const DenseMatrix& a, double tol) {
    if (frobenius_norm(a) == 0.0) return 0.0;

    Rng rng(Rng::derive(0x5eedULL, a.rows() * 0x10001ULL + a.cols()));
    std::vector<double> v(a.cols());
    for (double& x : v) x = rng.gaussian();

    double sigma = 0.0;
    std::vector<double> u(a.rows());
    for (std::size_t iter = 0; iter < 500; ++iter) {
        // u = a v
        for (std::size_t i = 0; i < a.rows(); ++i) {
            const double* ai = a.row_ptr(i);
            double s = 0.0;
            for (std::size_t j = 0; j < a.cols(); ++j) s += ai[j] * v[j];
            u[i] = s;
        }
        double unorm = 0.0;
        for (double x : u) unorm += x * x;
        unorm = std::sqrt(unorm);
        if (unorm == 0.0) {
            for (double& x : v) x = rng.gaussian();  // restart off the null space
            continue;
        }
        for (double& x : u) x /= unorm;
        // v = a' u
        std::fill(v.begin(), v.end(), 0.0);
        for (std::size_t i = 0; i < a.rows(); ++i) {
            const double* ai = a.row_ptr(i);
            const double ui = u[i];
            for (std::size_t j = 0; j < a.cols(); ++j) v[j] += ai[j] * ui;
        }
        double vnorm = 0.0;
        for (double x : v) vnorm += x * x;
        vnorm = std::sqrt(vnorm);
        const double prev = sigma;
        sigma = vnorm;
        if (vnorm == 0.0) break;
        for (double& x : v) x /= vnorm;
        if (std::fabs(sigma - prev) <= tol * sigma) break;
    }
    return sigma;
}

}  // namespace bfgd
