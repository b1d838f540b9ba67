#pragma once

#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "bfgd/dense_matrix.hpp"
#include "bfgd/factor_pair.hpp"
#include "bfgd/observations.hpp"
#include "bfgd/operators.hpp"

namespace bfgd {

/// Value/gradient oracle for a convex objective over m x n matrices, with a
/// gradient-Lipschitz constant and, when available, a strong-convexity
/// constant. Implementations are immutable; value/grad are pure, so one
/// objective may be shared across concurrent solves.
class ObjectiveModel {
public:
    virtual ~ObjectiveModel() = default;

    virtual std::size_t rows() const = 0;
    virtual std::size_t cols() const = 0;

    virtual double value(const DenseMatrix& x) const = 0;
    virtual DenseMatrix grad(const DenseMatrix& x) const = 0;

    /// Both at once; overridden where the two share intermediate work. Must
    /// produce exactly the values of value(x) and grad(x).
    virtual double value_and_grad(const DenseMatrix& x, DenseMatrix& grad_out) const {
        grad_out = grad(x);
        return value(x);
    }

    /// Gradient-Lipschitz constant L.
    virtual double smoothness() const = 0;

    /// Strong-convexity constant when one is known.
    virtual std::optional<double> strong_convexity() const { return std::nullopt; }

protected:
    void check_input(const DenseMatrix& x) const;
};

/// f(X) = 1/2 ||y - A(X)||^2 for a sensing map A. With this convention the
/// gradient is -A*(y - A(X)).
class LeastSquaresSensing final : public ObjectiveModel {
public:
    LeastSquaresSensing(std::shared_ptr<const SensingMap> map, std::vector<double> y);

    std::size_t rows() const override;
    std::size_t cols() const override;
    double value(const DenseMatrix& x) const override;
    DenseMatrix grad(const DenseMatrix& x) const override;
    double value_and_grad(const DenseMatrix& x, DenseMatrix& grad_out) const override;

    /// Masked objectives have L = 1 exactly; otherwise sigma_1(A)^2 is
    /// estimated by power iteration on X -> A*(A(X)) and cached.
    double smoothness() const override;
    std::optional<double> strong_convexity() const override;

    /// False when the power iteration hit its cap; the returned constant is
    /// then inflated by 10% as a conservative margin.
    bool smoothness_converged() const;

    const SensingMap& map() const { return *map_; }
    const std::vector<double>& observations() const { return y_; }

private:
    std::shared_ptr<const SensingMap> map_;
    std::vector<double> y_;
    mutable std::optional<double> cached_smoothness_;
    mutable bool smoothness_converged_ = true;
};

/// Convenience constructor for masked completion: observations are the
/// entries of `values` at `omega`.
std::shared_ptr<LeastSquaresSensing> make_completion_objective(
    std::size_t m, std::size_t n, std::vector<MaskEntry> omega, const DenseMatrix& values);

/// Negative log-likelihood of +-1 observations under the logistic link,
///   f(X) = sum over omega of log(1 + exp(-Y_ij X_ij)),
/// evaluated in a softplus form that is finite for all finite X. L = 1/4.
class OneBitLogistic final : public ObjectiveModel {
public:
    OneBitLogistic(std::size_t m, std::size_t n, std::vector<SignObservation> observations);

    std::size_t rows() const override { return m_; }
    std::size_t cols() const override { return n_; }
    double value(const DenseMatrix& x) const override;
    DenseMatrix grad(const DenseMatrix& x) const override;
    double smoothness() const override { return 0.25; }

    const std::vector<SignObservation>& observations() const { return observations_; }

private:
    std::size_t m_, n_;
    std::vector<SignObservation> observations_;
};

/// Probit-link analogue: f(X) = sum over omega of -log Phi(Y_ij X_ij / sigma),
/// with the Gaussian log-CDF evaluated through a tail-safe expansion.
/// L = 1/sigma^2.
class OneBitProbit final : public ObjectiveModel {
public:
    OneBitProbit(std::size_t m, std::size_t n, std::vector<SignObservation> observations,
                 double noise_sigma);

    std::size_t rows() const override { return m_; }
    std::size_t cols() const override { return n_; }
    double value(const DenseMatrix& x) const override;
    DenseMatrix grad(const DenseMatrix& x) const override;
    double smoothness() const override { return 1.0 / (noise_sigma_ * noise_sigma_); }

    double noise_sigma() const { return noise_sigma_; }
    const std::vector<SignObservation>& observations() const { return observations_; }

private:
    std::size_t m_, n_;
    std::vector<SignObservation> observations_;
    double noise_sigma_;
};

/// Balance penalty lambda * c * ||u'u - v'v||_F^2. Convex in the residual,
/// minimized (with zero gradient) at balanced pairs, and its gradient with
/// respect to the residual is symmetric.
struct BalanceRegularizer {
    double coefficient = 1.0 / 16.0;  // c
    double lambda = 1.0;

    double value(const FactorPair& pair) const;

    /// Factor-space gradients of lambda * g(u'u - v'v):
    ///   d/du = 4 c lambda u (u'u - v'v),  d/dv = -4 c lambda v (u'u - v'v).
    std::pair<DenseMatrix, DenseMatrix> grad_factors(const FactorPair& pair) const;

    /// Smoothness / strong convexity of lambda * g as a function of the
    /// residual matrix: both equal 2 c lambda for the squared Frobenius form.
    double smoothness() const { return 2.0 * coefficient * lambda; }
    double strong_convexity() const { return 2.0 * coefficient * lambda; }
};

struct FactorGrads {
    DenseMatrix gu;  // m x r
    DenseMatrix gv;  // n x r
};

/// Gradients of f(u v') with respect to the factors:
///   gu = grad(u v') v,  gv = grad(u v')' u.
FactorGrads grad_factors(const ObjectiveModel& obj, const FactorPair& pair);

/// Same contraction against an already-computed gradient matrix.
FactorGrads factor_grads_from(const DenseMatrix& grad, const FactorPair& pair);

namespace detail {
/// log(1 + exp(t)) without overflow.
double softplus(double t);
/// 1 / (1 + exp(-x)) without overflow.
double sigmoid(double x);
/// log Phi(z) for the standard normal CDF, accurate into the far left tail.
double log_norm_cdf(double z);
/// phi(z) / Phi(z), the inverse Mills ratio.
double norm_hazard(double z);
}  // namespace detail

}  // namespace bfgd
