#include "bfgd/solver.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bfgd/linalg.hpp"
#include "bfgd/rng.hpp"

namespace bfgd {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

/// base - eta * direction, elementwise. Every solver path funnels its update
/// through this helper so that equivalent paths are arithmetically identical.
DenseMatrix descend(const DenseMatrix& base, const DenseMatrix& direction, double eta) {
    DenseMatrix out = base;
    double* od = out.data().data();
    const double* dd = direction.data().data();
    for (std::size_t i = 0; i < out.size(); ++i) od[i] -= eta * dd[i];
    return out;
}

double rel_change_of(const DenseMatrix& x, const DenseMatrix& x_prev) {
    const double diff = frobenius_norm(sub(x, x_prev));
    const double denom = frobenius_norm(x);
    if (diff == 0.0) return 0.0;
    if (denom == 0.0) return std::numeric_limits<double>::infinity();
    return diff / denom;
}

FactorPair balanced_split(const SvdResult& svd) {
    DenseMatrix u = svd.left;
    DenseMatrix v = svd.right;
    for (std::size_t j = 0; j < svd.singulars.size(); ++j) {
        const double root = std::sqrt(svd.singulars[j]);
        for (std::size_t i = 0; i < u.rows(); ++i) u(i, j) *= root;
        for (std::size_t i = 0; i < v.rows(); ++i) v(i, j) *= root;
    }
    return {std::move(u), std::move(v)};
}

void validate_config(const SolverConfig& cfg, std::size_t m, std::size_t n) {
    if (cfg.rank < 1 || cfg.rank > std::min(m, n))
        throw std::invalid_argument("SolverConfig: rank out of range");
    if (cfg.max_iters < 1) throw std::invalid_argument("SolverConfig: max_iters must be >= 1");
    if (!(cfg.tol > 0.0)) throw std::invalid_argument("SolverConfig: tol must be positive");
}

FactorPair build_init(const ObjectiveModel& obj, const SolverConfig& cfg) {
    switch (cfg.init.kind) {
        case InitSpec::Kind::Spectral:
            return spectral_init(obj, cfg.rank, cfg.init.seed).pair;
        case InitSpec::Kind::Random:
            return random_init(obj.rows(), obj.cols(), cfg.rank, cfg.init.seed);
        case InitSpec::Kind::Provided: {
            if (!cfg.init.pair) throw std::invalid_argument("InitSpec: missing provided pair");
            const FactorPair& p = *cfg.init.pair;
            if (p.u.rows() != obj.rows() || p.v.rows() != obj.cols() ||
                p.u.cols() != cfg.rank || p.v.cols() != cfg.rank)
                throw std::invalid_argument("InitSpec: provided pair has wrong shape");
            return p;
        }
    }
    throw std::logic_error("InitSpec: unknown kind");
}

}  // namespace

SpectralInitResult spectral_init(const ObjectiveModel& obj, std::size_t rank,
                                 std::uint64_t seed) {
    const std::size_t m = obj.rows(), n = obj.cols();
    if (rank < 1 || rank > std::min(m, n))
        throw std::invalid_argument("spectral_init: rank out of range");

    const DenseMatrix g0 = obj.grad(DenseMatrix(m, n));
    if (frobenius_norm(g0) == 0.0)
        return {FactorPair{DenseMatrix(m, rank), DenseMatrix(n, rank)}, true};

    const DenseMatrix x0 = scale(g0, -1.0 / obj.smoothness());
    const SvdResult svd = truncated_svd(x0, rank, 10, 8, seed);
    return {balanced_split(svd), false};
}

FactorPair random_init(std::size_t m, std::size_t n, std::size_t rank, std::uint64_t seed) {
    if (rank < 1 || rank > std::min(m, n))
        throw std::invalid_argument("random_init: rank out of range");
    Rng rng(Rng::derive(seed, 0x121aULL));
    DenseMatrix u = gaussian_matrix(rng, m, rank);
    DenseMatrix v = gaussian_matrix(rng, n, rank);
    const double norm = frobenius_norm(matmul_a_bt(u, v));
    const double root = 1.0 / std::sqrt(norm);
    for (double& x : u.data()) x *= root;
    for (double& x : v.data()) x *= root;
    return {std::move(u), std::move(v)};
}

double step_size_smooth(const FactorPair& init, const ObjectiveModel& obj) {
    const double w_norm = spectral_norm(init.stacked());
    const double g_norm = spectral_norm(obj.grad(init.product()));
    return 1.0 / (20.0 * obj.smoothness() * w_norm * w_norm + 3.0 * g_norm);
}

double step_size_strongcvx(const FactorPair& init, double l_f, double l_g) {
    if (!(l_f > 0.0) || !(l_g > 0.0))
        throw std::invalid_argument("step_size_strongcvx: constants must be positive");
    const double w_norm = spectral_norm(init.stacked());
    return 1.0 / (12.0 * std::max(l_f, l_g) * w_norm * w_norm);
}

SolveResult bfgd_solve(const ObjectiveModel& obj, const std::optional<BalanceRegularizer>& reg,
                       const SolverConfig& cfg, const GroundTruth* truth) {
    validate_config(cfg, obj.rows(), obj.cols());
    if (cfg.regime == Regime::StronglyConvex && !reg)
        throw std::invalid_argument("bfgd_solve: strongly convex regime needs a regularizer");

    const auto start = Clock::now();
    FactorPair pair = build_init(obj, cfg);
    if (!pair.u.all_finite() || !pair.v.all_finite())
        throw std::invalid_argument("bfgd_solve: non-finite initial pair");

    const double eta = cfg.step_override
                           ? *cfg.step_override
                           : (cfg.regime == Regime::Smooth
                                  ? step_size_smooth(pair, obj)
                                  : step_size_strongcvx(pair, obj.smoothness(),
                                                        reg->smoothness()));

    DenseMatrix x_prev = pair.product();
    DenseMatrix grad_x;  // objective gradient at the current iterate
    const double f_initial = obj.value_and_grad(x_prev, grad_x);
    // A zero initial value gives the 1e6x ratio test no scale (any roundoff
    // would trip it); divergence is then caught by the finiteness check.
    const double blowup = f_initial > 0.0 ? 1e6 * f_initial
                                          : std::numeric_limits<double>::infinity();
    std::optional<double> dist_prev;
    if (truth) dist_prev = procrustes_dist(pair, *truth);

    SolveResult result;
    result.termination = Termination::MaxIters;
    result.trace.reserve(std::min<std::size_t>(cfg.max_iters, 4096));

    for (std::size_t iter = 1; iter <= cfg.max_iters; ++iter) {
        FactorGrads g = factor_grads_from(grad_x, pair);
        if (cfg.regime == Regime::StronglyConvex) {
            auto [ru, rv] = reg->grad_factors(pair);
            axpy(1.0, ru, g.gu);
            axpy(1.0, rv, g.gv);
        }
        FactorPair next{descend(pair.u, g.gu, eta), descend(pair.v, g.gv, eta)};
        if (!next.u.all_finite() || !next.v.all_finite()) {
            result.termination = Termination::Diverged;
            break;
        }
        pair = std::move(next);

        const DenseMatrix x = pair.product();
        if (!x.all_finite()) {
            result.termination = Termination::Diverged;
            break;
        }
        const double f = obj.value_and_grad(x, grad_x);

        TraceRecord rec;
        rec.iter = iter;
        rec.f_value = f;
        rec.rel_change = rel_change_of(x, x_prev);
        rec.balance_residual = pair.balance_residual();
        if (truth) {
            const double dist = procrustes_dist(pair, *truth);
            rec.dist_to_truth = dist;
            if (dist_prev && *dist_prev > 0.0)
                rec.contraction = (dist * dist) / (*dist_prev * *dist_prev);
            dist_prev = dist;
        }
        rec.elapsed_s = seconds_since(start);
        result.trace.push_back(rec);

        if (!std::isfinite(f) || f > blowup) {
            result.termination = Termination::Diverged;
            break;
        }
        if (rec.rel_change <= cfg.tol) {
            result.termination = Termination::Tolerance;
            break;
        }
        x_prev = x;
    }

    result.x_hat = pair.product();
    result.final = std::move(pair);
    return result;
}

double lifted_value(const ObjectiveModel& obj, const DenseMatrix& z) {
    const std::size_t m = obj.rows(), n = obj.cols();
    if (z.rows() != m + n || z.cols() != m + n)
        throw std::invalid_argument("lifted_value: expected (m+n) x (m+n) input");
    DenseMatrix b(m, n);
    DenseMatrix c_t(m, n);  // C' where C is the lower-left block
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            b(i, j) = z(i, m + j);
            c_t(i, j) = z(m + j, i);
        }
    return 0.5 * obj.value(b) + 0.5 * obj.value(c_t);
}

DenseMatrix lifted_grad(const ObjectiveModel& obj, const DenseMatrix& z) {
    const std::size_t m = obj.rows(), n = obj.cols();
    if (z.rows() != m + n || z.cols() != m + n)
        throw std::invalid_argument("lifted_grad: expected (m+n) x (m+n) input");
    DenseMatrix b(m, n);
    DenseMatrix c_t(m, n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            b(i, j) = z(i, m + j);
            c_t(i, j) = z(m + j, i);
        }
    const DenseMatrix gb = obj.grad(b);
    const DenseMatrix gc = obj.grad(c_t);
    DenseMatrix out(m + n, m + n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            out(i, m + j) = 0.5 * gb(i, j);
            out(m + j, i) = 0.5 * gc(i, j);
        }
    return out;
}

DenseMatrix lifted_fgd_step(const DenseMatrix& w, const ObjectiveModel& obj, double eta) {
    const std::size_t m = obj.rows(), n = obj.cols();
    if (w.rows() != m + n)
        throw std::invalid_argument("lifted_fgd_step: stacked iterate has wrong row count");
    const std::size_t r = w.cols();
    FactorPair pair{DenseMatrix(m, r), DenseMatrix(n, r)};
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < r; ++j) pair.u(i, j) = w(i, j);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < r; ++j) pair.v(i, j) = w(m + i, j);

    const FactorGrads g = grad_factors(obj, pair);
    return vstack(descend(pair.u, g.gu, eta), descend(pair.v, g.gv, eta));
}

SolveResult svp_solve(const ObjectiveModel& obj, std::size_t rank, double step,
                      const SolverConfig& cfg, const GroundTruth* truth,
                      const DenseMatrix* x0) {
    validate_config(cfg, obj.rows(), obj.cols());
    if (!(step > 0.0)) throw std::invalid_argument("svp_solve: step must be positive");

    const auto start = Clock::now();
    DenseMatrix x = x0 ? *x0 : DenseMatrix(obj.rows(), obj.cols());
    if (x.rows() != obj.rows() || x.cols() != obj.cols())
        throw std::invalid_argument("svp_solve: x0 has wrong shape");

    DenseMatrix x_prev = x;
    DenseMatrix grad_x;
    const double f_initial = obj.value_and_grad(x, grad_x);
    const double blowup = f_initial > 0.0 ? 1e6 * f_initial
                                          : std::numeric_limits<double>::infinity();
    FactorPair pair{DenseMatrix(obj.rows(), rank), DenseMatrix(obj.cols(), rank)};
    std::optional<double> dist_prev;
    if (truth) {
        // Distance is measured on the balanced split of the current iterate.
        const SvdResult svd0 = truncated_svd(x_prev, rank, 10, 8, Rng::derive(0x59f0ULL, 0));
        dist_prev = procrustes_dist(balanced_split(svd0), *truth);
    }

    SolveResult result;
    result.termination = Termination::MaxIters;

    for (std::size_t iter = 1; iter <= cfg.max_iters; ++iter) {
        const DenseMatrix stepped = descend(x, grad_x, step);
        if (!stepped.all_finite()) {
            result.termination = Termination::Diverged;
            break;
        }
        const SvdResult svd = truncated_svd(stepped, rank, 10, 8, Rng::derive(0x59f0ULL, iter));
        pair = balanced_split(svd);
        x = pair.product();

        const double f = obj.value_and_grad(x, grad_x);
        TraceRecord rec;
        rec.iter = iter;
        rec.f_value = f;
        rec.rel_change = rel_change_of(x, x_prev);
        rec.balance_residual = pair.balance_residual();
        if (truth) {
            const double dist = procrustes_dist(pair, *truth);
            rec.dist_to_truth = dist;
            if (dist_prev && *dist_prev > 0.0)
                rec.contraction = (dist * dist) / (*dist_prev * *dist_prev);
            dist_prev = dist;
        }
        rec.elapsed_s = seconds_since(start);
        result.trace.push_back(rec);

        if (!std::isfinite(f) || f > blowup) {
            result.termination = Termination::Diverged;
            break;
        }
        if (rec.rel_change <= cfg.tol) {
            result.termination = Termination::Tolerance;
            break;
        }
        x_prev = x;
    }

    result.x_hat = pair.product();
    result.final = std::move(pair);
    return result;
}

}  // namespace bfgd
