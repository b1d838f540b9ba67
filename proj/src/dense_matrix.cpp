#include "bfgd/dense_matrix.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace bfgd {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
        throw std::invalid_argument("DenseMatrix: data length does not match rows*cols");
    if (!all_finite())
        throw std::invalid_argument("DenseMatrix: non-finite entry");
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

DenseMatrix DenseMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c)
            throw std::invalid_argument("DenseMatrix::from_rows: ragged rows");
        data.insert(data.end(), row.begin(), row.end());
    }
    return DenseMatrix(r, c, std::move(data));
}

bool DenseMatrix::all_finite() const noexcept {
    for (double x : data_)
        if (!std::isfinite(x)) return false;
    return true;
}

namespace {

void require(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    require(a.cols() == b.rows(), "matmul: inner dimensions differ");
    DenseMatrix c(a.rows(), b.cols());
    const std::size_t n = b.cols(), k = a.cols();
    // i-k-j order keeps both b and c accesses contiguous.
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* ci = c.row_ptr(i);
        const double* ai = a.row_ptr(i);
        for (std::size_t p = 0; p < k; ++p) {
            const double aik = ai[p];
            if (aik == 0.0) continue;
            const double* bp = b.row_ptr(p);
            for (std::size_t j = 0; j < n; ++j) ci[j] += aik * bp[j];
        }
    }
    return c;
}

DenseMatrix matmul_at_b(const DenseMatrix& a, const DenseMatrix& b) {
    require(a.rows() == b.rows(), "matmul_at_b: row counts differ");
    DenseMatrix c(a.cols(), b.cols());
    const std::size_t n = b.cols();
    for (std::size_t p = 0; p < a.rows(); ++p) {
        const double* ap = a.row_ptr(p);
        const double* bp = b.row_ptr(p);
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double api = ap[i];
            if (api == 0.0) continue;
            double* ci = c.row_ptr(i);
            for (std::size_t j = 0; j < n; ++j) ci[j] += api * bp[j];
        }
    }
    return c;
}

DenseMatrix matmul_a_bt(const DenseMatrix& a, const DenseMatrix& b) {
    require(a.cols() == b.cols(), "matmul_a_bt: column counts differ");
    DenseMatrix c(a.rows(), b.rows());
    const std::size_t k = a.cols();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* ai = a.row_ptr(i);
        double* ci = c.row_ptr(i);
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const double* bj = b.row_ptr(j);
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
            ci[j] = s;
        }
    }
    return c;
}

DenseMatrix transpose(const DenseMatrix& a) {
    DenseMatrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), "add: shape mismatch");
    DenseMatrix c = a;
    double* cd = c.data().data();
    const double* bd = b.data().data();
    for (std::size_t i = 0; i < c.size(); ++i) cd[i] += bd[i];
    return c;
}

DenseMatrix sub(const DenseMatrix& a, const DenseMatrix& b) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), "sub: shape mismatch");
    DenseMatrix c = a;
    double* cd = c.data().data();
    const double* bd = b.data().data();
    for (std::size_t i = 0; i < c.size(); ++i) cd[i] -= bd[i];
    return c;
}

DenseMatrix scale(const DenseMatrix& a, double s) {
    DenseMatrix c = a;
    for (double& x : c.data()) x *= s;
    return c;
}

void axpy(double alpha, const DenseMatrix& x, DenseMatrix& y) {
    require(x.rows() == y.rows() && x.cols() == y.cols(), "axpy: shape mismatch");
    double* yd = y.data().data();
    const double* xd = x.data().data();
    for (std::size_t i = 0; i < y.size(); ++i) yd[i] += alpha * xd[i];
}

double frobenius_norm(const DenseMatrix& a) {
    double s = 0.0;
    for (double x : a.data()) s += x * x;
    return std::sqrt(s);
}

double frobenius_dot(const DenseMatrix& a, const DenseMatrix& b) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), "frobenius_dot: shape mismatch");
    const double* ad = a.data().data();
    const double* bd = b.data().data();
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += ad[i] * bd[i];
    return s;
}

double max_abs(const DenseMatrix& a) {
    double m = 0.0;
    for (double x : a.data()) m = std::max(m, std::fabs(x));
    return m;
}

DenseMatrix vstack(const DenseMatrix& top, const DenseMatrix& bottom) {
    require(top.cols() == bottom.cols(), "vstack: column counts differ");
    DenseMatrix s(top.rows() + bottom.rows(), top.cols());
    std::memcpy(s.data().data(), top.data().data(), top.size() * sizeof(double));
    std::memcpy(s.data().data() + top.size(), bottom.data().data(),
                bottom.size() * sizeof(double));
    return s;
}

}  // namespace bfgd
