#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace bfgd {

/// Row-major dense real matrix. Constructors reject non-finite entries, so a
/// freshly built matrix is always NaN/Inf-free; in-place mutation through
/// operator() is the caller's responsibility.
class DenseMatrix {
public:
    DenseMatrix() = default;

    /// Zero-filled rows x cols matrix.
    DenseMatrix(std::size_t rows, std::size_t cols);

    /// Takes ownership of row-major data; throws if the length is wrong or
    /// any entry is non-finite.
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static DenseMatrix identity(std::size_t n);
    static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }
    const double* row_ptr(std::size_t i) const { return data_.data() + i * cols_; }
    double* row_ptr(std::size_t i) { return data_.data() + i * cols_; }

    bool all_finite() const noexcept;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// a * b; dimensions must agree.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);

/// a' * b without forming the transpose.
DenseMatrix matmul_at_b(const DenseMatrix& a, const DenseMatrix& b);

/// a * b' without forming the transpose.
DenseMatrix matmul_a_bt(const DenseMatrix& a, const DenseMatrix& b);

DenseMatrix transpose(const DenseMatrix& a);
DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix sub(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix scale(const DenseMatrix& a, double s);

/// y += alpha * x, in place.
void axpy(double alpha, const DenseMatrix& x, DenseMatrix& y);

double frobenius_norm(const DenseMatrix& a);
double frobenius_dot(const DenseMatrix& a, const DenseMatrix& b);
double max_abs(const DenseMatrix& a);

/// [top; bottom] with matching column counts.
DenseMatrix vstack(const DenseMatrix& top, const DenseMatrix& bottom);

}  // namespace bfgd
