#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "bfgd/dense_matrix.hpp"
#include "bfgd/factor_pair.hpp"
#include "bfgd/metrics.hpp"
#include "bfgd/objectives.hpp"

namespace bfgd {

enum class Termination { Tolerance, MaxIters, Diverged };

enum class Regime { Smooth, StronglyConvex };

struct InitSpec {
    enum class Kind { Spectral, Random, Provided };

    Kind kind = Kind::Spectral;
    std::uint64_t seed = 0;
    std::optional<FactorPair> pair;

    static InitSpec spectral() { return {}; }
    static InitSpec random(std::uint64_t seed) { return {Kind::Random, seed, std::nullopt}; }
    static InitSpec provided(FactorPair pair) {
        return {Kind::Provided, 0, std::move(pair)};
    }
};

struct SolverConfig {
    std::size_t rank = 1;
    std::size_t max_iters = 4000;
    double tol = 5e-6;
    std::optional<double> step_override;
    double lambda = 1.0;
    double reg_coefficient = 1.0 / 16.0;
    InitSpec init = InitSpec::spectral();
    Regime regime = Regime::StronglyConvex;
};

struct TraceRecord {
    std::size_t iter = 0;  // strictly increasing, starting at 1
    double f_value = 0.0;
    double rel_change = 0.0;  // ||X_t - X_{t-1}||_F / ||X_t||_F
    std::optional<double> dist_to_truth;
    std::optional<double> contraction;  // dist_t^2 / dist_{t-1}^2
    double balance_residual = 0.0;
    double elapsed_s = 0.0;  // wall time since solve start, nondecreasing
};

using SolveTrace = std::vector<TraceRecord>;

struct SolveResult {
    FactorPair final;
    DenseMatrix x_hat;  // product of the final pair
    SolveTrace trace;
    Termination termination = Termination::MaxIters;
};

struct SpectralInitResult {
    FactorPair pair;
    bool zero_gradient = false;  // grad(0) vanished; the pair is all zeros
};

/// Balanced split of the rank-r truncated SVD of -(1/L) grad(0).
SpectralInitResult spectral_init(const ObjectiveModel& obj, std::size_t rank,
                                 std::uint64_t seed = 0);

/// Gaussian factors jointly rescaled so that ||u v'||_F = 1.
FactorPair random_init(std::size_t m, std::size_t n, std::size_t rank, std::uint64_t seed);

/// Smooth-regime step size:
///   1 / (20 L ||[u0; v0]||_2^2 + 3 ||grad(u0 v0')||_2).
double step_size_smooth(const FactorPair& init, const ObjectiveModel& obj);

/// Strongly-convex-regime step size:
///   1 / (12 max{L, L_g} ||[u0; v0]||_2^2).
double step_size_strongcvx(const FactorPair& init, double l_f, double l_g);

/// Factored gradient descent on f(u v'). In the smooth regime the update is
/// plain descent on the factor gradients; in the strongly convex regime the
/// balance regularizer's gradients are added (descent on f + lambda g),
/// which requires `reg`. Stops when rel_change <= tol or after max_iters;
/// flags divergence when f exceeds 1e6 times its initial value or iterates
/// stop being finite.
SolveResult bfgd_solve(const ObjectiveModel& obj, const std::optional<BalanceRegularizer>& reg,
                       const SolverConfig& cfg, const GroundTruth* truth = nullptr);

/// Value and gradient of the lifted objective over (m+n) x (m+n) matrices
/// with blocks [A B; C D]:  fhat(Z) = 1/2 f(B) + 1/2 f(C').
double lifted_value(const ObjectiveModel& obj, const DenseMatrix& z);
DenseMatrix lifted_grad(const ObjectiveModel& obj, const DenseMatrix& z);

/// One step of gradient descent on fhat(W W') for the stacked (m+n) x r
/// iterate; arithmetically identical to one smooth-regime step on (u, v).
DenseMatrix lifted_fgd_step(const DenseMatrix& w, const ObjectiveModel& obj, double eta);

/// Singular value projection baseline:
///   X_{t+1} = P_r(X_t - step * grad(X_t)),
/// starting from zero unless x0 is given, with the same stopping rules as
/// bfgd_solve. The trace's balance residual is 0 (iterates are kept as
/// balanced splits of the projection).
SolveResult svp_solve(const ObjectiveModel& obj, std::size_t rank, double step,
                      const SolverConfig& cfg, const GroundTruth* truth = nullptr,
                      const DenseMatrix* x0 = nullptr);

}  // namespace bfgd
