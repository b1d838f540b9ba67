#include "bfgd/operators.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

#include "bfgd/rng.hpp"

namespace bfgd {

void SensingMap::check_apply_dims(const DenseMatrix& x) const {
    if (x.rows() != rows() || x.cols() != cols())
        throw std::invalid_argument("SensingMap::apply: input dimensions mismatch");
}

void SensingMap::check_adjoint_dims(std::span<const double> y) const {
    if (y.size() != samples())
        throw std::invalid_argument("SensingMap::adjoint: vector length mismatch");
}

GaussianMap::GaussianMap(std::size_t m, std::size_t n, std::size_t p, std::uint64_t seed)
    : m_(m), n_(n), p_(p), seed_(seed), rows_(p, m * n) {
    if (m == 0 || n == 0 || p == 0)
        throw std::invalid_argument("GaussianMap: dimensions must be positive");
    Rng rng(Rng::derive(seed, 0x6a55ULL));
    const double stddev = 1.0 / std::sqrt(static_cast<double>(p));
    for (double& x : rows_.data()) x = stddev * rng.gaussian();
}

std::vector<double> GaussianMap::apply(const DenseMatrix& x) const {
    check_apply_dims(x);
    std::vector<double> y(p_);
    const double* xd = x.data().data();
    const std::size_t len = m_ * n_;
    // Four accumulators break the additive dependency chain.
    for (std::size_t k = 0; k < p_; ++k) {
        const double* rk = rows_.row_ptr(k);
        double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
        std::size_t i = 0;
        for (; i + 4 <= len; i += 4) {
            s0 += rk[i] * xd[i];
            s1 += rk[i + 1] * xd[i + 1];
            s2 += rk[i + 2] * xd[i + 2];
            s3 += rk[i + 3] * xd[i + 3];
        }
        for (; i < len; ++i) s0 += rk[i] * xd[i];
        y[k] = (s0 + s1) + (s2 + s3);
    }
    return y;
}

DenseMatrix GaussianMap::adjoint(std::span<const double> y) const {
    check_adjoint_dims(y);
    DenseMatrix out(m_, n_);
    double* od = out.data().data();
    const std::size_t len = m_ * n_;
    for (std::size_t k = 0; k < p_; ++k) {
        const double yk = y[k];
        if (yk == 0.0) continue;
        const double* rk = rows_.row_ptr(k);
        for (std::size_t i = 0; i < len; ++i) od[i] += yk * rk[i];
    }
    return out;
}

MaskOperator::MaskOperator(std::size_t m, std::size_t n, std::vector<MaskEntry> omega)
    : m_(m), n_(n), omega_(std::move(omega)) {
    if (m == 0 || n == 0) throw std::invalid_argument("MaskOperator: empty dimensions");
    for (const auto& e : omega_)
        if (e.row >= m_ || e.col >= n_)
            throw std::invalid_argument("MaskOperator: index out of range");
    std::sort(omega_.begin(), omega_.end());
    if (std::adjacent_find(omega_.begin(), omega_.end()) != omega_.end())
        throw std::invalid_argument("MaskOperator: duplicate index");
}

std::vector<double> MaskOperator::apply(const DenseMatrix& x) const {
    check_apply_dims(x);
    std::vector<double> y(omega_.size());
    for (std::size_t k = 0; k < omega_.size(); ++k) y[k] = x(omega_[k].row, omega_[k].col);
    return y;
}

DenseMatrix MaskOperator::adjoint(std::span<const double> y) const {
    check_adjoint_dims(y);
    DenseMatrix out(m_, n_);
    for (std::size_t k = 0; k < omega_.size(); ++k) out(omega_[k].row, omega_[k].col) = y[k];
    return out;
}

namespace {

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

}  // namespace

void fwht(std::span<double> v) {
    const std::size_t n = v.size();
    if (n == 0 || (n & (n - 1)) != 0)
        throw std::invalid_argument("fwht: length must be a power of two");
    for (std::size_t h = 1; h < n; h <<= 1) {
        for (std::size_t i = 0; i < n; i += h << 1) {
            for (std::size_t j = i; j < i + h; ++j) {
                const double a = v[j], b = v[j + h];
                v[j] = a + b;
                v[j + h] = a - b;
            }
        }
    }
}

StructuredMap::StructuredMap(std::size_t m, std::size_t n, std::size_t p, std::uint64_t seed)
    : m_(m), n_(n), p_(p), padded_(next_pow2(m * n)), seed_(seed) {
    if (m == 0 || n == 0 || p == 0)
        throw std::invalid_argument("StructuredMap: dimensions must be positive");
    if (p > padded_) throw std::invalid_argument("StructuredMap: more samples than rows");
    Rng rng(Rng::derive(seed, 0x57a7ULL));
    sign_diagonal_.resize(padded_);
    for (double& s : sign_diagonal_) s = (rng.next_u64() & 1) ? 1.0 : -1.0;
    selected_ = sample_without_replacement(rng, padded_, p_);
}

std::vector<double> StructuredMap::apply(const DenseMatrix& x) const {
    check_apply_dims(x);
    std::vector<double> buf(padded_, 0.0);
    const std::size_t len = m_ * n_;
    const double* xd = x.data().data();
    for (std::size_t i = 0; i < len; ++i) buf[i] = sign_diagonal_[i] * xd[i];
    fwht(buf);
    const double scl = 1.0 / std::sqrt(static_cast<double>(p_));
    std::vector<double> y(p_);
    for (std::size_t k = 0; k < p_; ++k) y[k] = scl * buf[selected_[k]];
    return y;
}

DenseMatrix StructuredMap::adjoint(std::span<const double> y) const {
    check_adjoint_dims(y);
    std::vector<double> buf(padded_, 0.0);
    const double scl = 1.0 / std::sqrt(static_cast<double>(p_));
    for (std::size_t k = 0; k < p_; ++k) buf[selected_[k]] = scl * y[k];
    fwht(buf);  // the Walsh-Hadamard matrix is symmetric
    DenseMatrix out(m_, n_);
    double* od = out.data().data();
    const std::size_t len = m_ * n_;
    for (std::size_t i = 0; i < len; ++i) od[i] = sign_diagonal_[i] * buf[i];
    return out;
}

RipBracket estimate_rip(const SensingMap& map, std::size_t rank, std::size_t trials,
                        std::uint64_t seed) {
    if (trials == 0) throw std::invalid_argument("estimate_rip: trials must be >= 1");
    Rng rng(Rng::derive(seed, 0x41bULL));
    RipBracket bracket{std::numeric_limits<double>::infinity(), 0.0};
    for (std::size_t t = 0; t < trials; ++t) {
        DenseMatrix u = gaussian_matrix(rng, map.rows(), rank);
        DenseMatrix v = gaussian_matrix(rng, map.cols(), rank);
        DenseMatrix x = matmul_a_bt(u, v);
        const double norm = frobenius_norm(x);
        if (norm == 0.0) continue;
        for (double& e : x.data()) e /= norm;
        double energy = 0.0;
        for (double yi : map.apply(x)) energy += yi * yi;
        const double dev = std::fabs(energy - 1.0);
        bracket.delta_low = std::min(bracket.delta_low, dev);
        bracket.delta_high = std::max(bracket.delta_high, dev);
    }
    return bracket;
}

void mask_to_csv(const MaskOperator& mask, std::ostream& out) {
    for (const auto& e : mask.omega()) out << e.row << ',' << e.col << '\n';
}

MaskOperator mask_from_csv(std::istream& in, std::size_t m, std::size_t n) {
    std::vector<MaskEntry> omega;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error("mask csv line " + std::to_string(lineno) +
                                     ": expected 'i,j'");
        std::size_t pos = 0;
        unsigned long long i = 0, j = 0;
        try {
            i = std::stoull(line.substr(0, comma), &pos);
            if (pos != comma) throw std::invalid_argument("trailing");
            j = std::stoull(line.substr(comma + 1), &pos);
            if (pos != line.size() - comma - 1) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw std::runtime_error("mask csv line " + std::to_string(lineno) +
                                     ": malformed index");
        }
        omega.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j)});
    }
    return MaskOperator(m, n, std::move(omega));
}

}  // namespace bfgd
