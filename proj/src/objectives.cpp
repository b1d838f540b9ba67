#include "bfgd/objectives.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "bfgd/rng.hpp"

namespace bfgd {

namespace detail {

double softplus(double t) {
    if (t > 35.0) return t;  // log1p(exp(t)) == t to double precision
    return std::log1p(std::exp(t));
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double log_norm_cdf(double z) {
    if (z > -30.0) return std::log(0.5 * std::erfc(-z * std::numbers::sqrt2 / 2.0));
    // Far left tail: Phi(z) = phi(z)/(-z) (1 - 1/z^2 + 3/z^4 - 15/z^6 + ...).
    const double z2 = z * z;
    const double series = -1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
    return -0.5 * z2 - 0.5 * std::log(2.0 * std::numbers::pi) - std::log(-z) +
           std::log1p(series);
}

double norm_hazard(double z) {
    const double log_phi = -0.5 * z * z - 0.5 * std::log(2.0 * std::numbers::pi);
    return std::exp(log_phi - log_norm_cdf(z));
}

}  // namespace detail

void ObjectiveModel::check_input(const DenseMatrix& x) const {
    if (x.rows() != rows() || x.cols() != cols())
        throw std::invalid_argument("ObjectiveModel: input dimensions mismatch");
    if (!x.all_finite())
        throw std::invalid_argument("ObjectiveModel: non-finite input");
}

LeastSquaresSensing::LeastSquaresSensing(std::shared_ptr<const SensingMap> map,
                                         std::vector<double> y)
    : map_(std::move(map)), y_(std::move(y)) {
    if (!map_) throw std::invalid_argument("LeastSquaresSensing: null map");
    if (y_.size() != map_->samples())
        throw std::invalid_argument("LeastSquaresSensing: observation length mismatch");
}

std::size_t LeastSquaresSensing::rows() const { return map_->rows(); }
std::size_t LeastSquaresSensing::cols() const { return map_->cols(); }

double LeastSquaresSensing::value(const DenseMatrix& x) const {
    check_input(x);
    const std::vector<double> ax = map_->apply(x);
    double s = 0.0;
    for (std::size_t k = 0; k < y_.size(); ++k) {
        const double r = y_[k] - ax[k];
        s += r * r;
    }
    return 0.5 * s;
}

DenseMatrix LeastSquaresSensing::grad(const DenseMatrix& x) const {
    check_input(x);
    std::vector<double> residual = map_->apply(x);
    for (std::size_t k = 0; k < residual.size(); ++k) residual[k] = y_[k] - residual[k];
    DenseMatrix g = map_->adjoint(residual);
    for (double& e : g.data()) e = -e;
    return g;
}

double LeastSquaresSensing::value_and_grad(const DenseMatrix& x, DenseMatrix& grad_out) const {
    check_input(x);
    std::vector<double> residual = map_->apply(x);
    for (std::size_t k = 0; k < residual.size(); ++k) residual[k] = y_[k] - residual[k];
    double s = 0.0;
    for (double r : residual) s += r * r;
    grad_out = map_->adjoint(residual);
    for (double& e : grad_out.data()) e = -e;
    return 0.5 * s;
}

double LeastSquaresSensing::smoothness() const {
    if (dynamic_cast<const MaskOperator*>(map_.get()) != nullptr) return 1.0;
    if (!cached_smoothness_) {
        // Power iteration for sigma_1(A)^2 through X -> A*(A(X)).
        Rng rng(Rng::derive(0x10d5ULL, map_->rows() * 8191 + map_->cols()));
        DenseMatrix x = gaussian_matrix(rng, map_->rows(), map_->cols());
        double lambda = 0.0;
        bool converged = false;
        for (std::size_t iter = 0; iter < 500; ++iter) {
            const double norm = frobenius_norm(x);
            if (norm == 0.0) {
                x = gaussian_matrix(rng, map_->rows(), map_->cols());
                continue;
            }
            for (double& e : x.data()) e /= norm;
            x = map_->adjoint(map_->apply(x));
            const double next = frobenius_norm(x);  // Rayleigh quotient of A*A
            if (iter > 0 && std::fabs(next - lambda) <= 1e-6 * next) {
                lambda = next;
                converged = true;
                break;
            }
            lambda = next;
        }
        smoothness_converged_ = converged;
        cached_smoothness_ = converged ? lambda : lambda * 1.1;
    }
    return *cached_smoothness_;
}

std::optional<double> LeastSquaresSensing::strong_convexity() const {
    // A full-entry mask is the identity map, which is 1-strongly convex.
    if (const auto* mask = dynamic_cast<const MaskOperator*>(map_.get()))
        if (mask->omega().size() == rows() * cols()) return 1.0;
    return std::nullopt;
}

bool LeastSquaresSensing::smoothness_converged() const {
    smoothness();
    return smoothness_converged_;
}

std::shared_ptr<LeastSquaresSensing> make_completion_objective(
    std::size_t m, std::size_t n, std::vector<MaskEntry> omega, const DenseMatrix& values) {
    auto mask = std::make_shared<MaskOperator>(m, n, std::move(omega));
    std::vector<double> y = mask->apply(values);
    return std::make_shared<LeastSquaresSensing>(std::move(mask), std::move(y));
}

namespace {

void check_observations(std::size_t m, std::size_t n,
                        const std::vector<SignObservation>& obs) {
    for (const auto& o : obs) {
        if (o.row >= m || o.col >= n)
            throw std::invalid_argument("one-bit objective: index out of range");
        if (o.label != 1 && o.label != -1)
            throw std::invalid_argument("one-bit objective: label must be +-1");
    }
}

}  // namespace

OneBitLogistic::OneBitLogistic(std::size_t m, std::size_t n,
                               std::vector<SignObservation> observations)
    : m_(m), n_(n), observations_(std::move(observations)) {
    check_observations(m_, n_, observations_);
}

double OneBitLogistic::value(const DenseMatrix& x) const {
    check_input(x);
    double s = 0.0;
    for (const auto& o : observations_) s += detail::softplus(-o.label * x(o.row, o.col));
    return s;
}

DenseMatrix OneBitLogistic::grad(const DenseMatrix& x) const {
    check_input(x);
    DenseMatrix g(m_, n_);
    for (const auto& o : observations_) {
        const double p = detail::sigmoid(x(o.row, o.col));
        g(o.row, o.col) += p - (o.label > 0 ? 1.0 : 0.0);
    }
    return g;
}

OneBitProbit::OneBitProbit(std::size_t m, std::size_t n,
                           std::vector<SignObservation> observations, double noise_sigma)
    : m_(m), n_(n), observations_(std::move(observations)), noise_sigma_(noise_sigma) {
    check_observations(m_, n_, observations_);
    if (!(noise_sigma_ > 0.0))
        throw std::invalid_argument("OneBitProbit: noise_sigma must be positive");
}

double OneBitProbit::value(const DenseMatrix& x) const {
    check_input(x);
    double s = 0.0;
    for (const auto& o : observations_)
        s -= detail::log_norm_cdf(o.label * x(o.row, o.col) / noise_sigma_);
    return s;
}

DenseMatrix OneBitProbit::grad(const DenseMatrix& x) const {
    check_input(x);
    DenseMatrix g(m_, n_);
    for (const auto& o : observations_) {
        const double z = o.label * x(o.row, o.col) / noise_sigma_;
        g(o.row, o.col) -= o.label * detail::norm_hazard(z) / noise_sigma_;
    }
    return g;
}

double BalanceRegularizer::value(const FactorPair& pair) const {
    const double r = pair.balance_residual();
    return lambda * coefficient * r * r;
}

std::pair<DenseMatrix, DenseMatrix> BalanceRegularizer::grad_factors(
    const FactorPair& pair) const {
    const DenseMatrix residual = sub(matmul_at_b(pair.u, pair.u), matmul_at_b(pair.v, pair.v));
    const double factor = 4.0 * coefficient * lambda;
    DenseMatrix gu = scale(matmul(pair.u, residual), factor);
    DenseMatrix gv = scale(matmul(pair.v, residual), -factor);
    return {std::move(gu), std::move(gv)};
}

FactorGrads grad_factors(const ObjectiveModel& obj, const FactorPair& pair) {
    if (pair.u.rows() != obj.rows() || pair.v.rows() != obj.cols() ||
        pair.u.cols() != pair.v.cols())
        throw std::invalid_argument("grad_factors: factor dimensions mismatch");
    return factor_grads_from(obj.grad(pair.product()), pair);
}

FactorGrads factor_grads_from(const DenseMatrix& grad, const FactorPair& pair) {
    return {matmul(grad, pair.v), matmul_at_b(grad, pair.u)};
}

}  // namespace bfgd
