#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "bfgd/dense_matrix.hpp"
#include "bfgd/observations.hpp"

namespace bfgd {

/// Linear map A from m x n matrices to p-vectors, with exact adjoint under
/// the Frobenius / l2 inner products. Implementations are immutable after
/// construction; apply/adjoint are pure and reentrant.
class SensingMap {
public:
    virtual ~SensingMap() = default;

    virtual std::size_t rows() const = 0;     // m
    virtual std::size_t cols() const = 0;     // n
    virtual std::size_t samples() const = 0;  // p

    virtual std::vector<double> apply(const DenseMatrix& x) const = 0;
    virtual DenseMatrix adjoint(std::span<const double> y) const = 0;

protected:
    void check_apply_dims(const DenseMatrix& x) const;
    void check_adjoint_dims(std::span<const double> y) const;
};

/// Dense map with i.i.d. N(0, 1/p) entries, stored explicitly as a
/// p x (m*n) row matrix. The 1/p variance centers ||A(X)||^2 near
/// ||X||_F^2 for random low-rank X.
class GaussianMap final : public SensingMap {
public:
    GaussianMap(std::size_t m, std::size_t n, std::size_t p, std::uint64_t seed);

    std::size_t rows() const override { return m_; }
    std::size_t cols() const override { return n_; }
    std::size_t samples() const override { return p_; }
    std::uint64_t seed() const { return seed_; }

    std::vector<double> apply(const DenseMatrix& x) const override;
    DenseMatrix adjoint(std::span<const double> y) const override;

    const DenseMatrix& sampling_rows() const { return rows_; }

private:
    std::size_t m_, n_, p_;
    std::uint64_t seed_;
    DenseMatrix rows_;  // p x (m*n)
};

/// Entrywise sampling operator: apply gathers the entries at omega, adjoint
/// scatters them back with zeros elsewhere.
class MaskOperator final : public SensingMap {
public:
    /// omega must be in-range, duplicate-free; it is stored sorted.
    MaskOperator(std::size_t m, std::size_t n, std::vector<MaskEntry> omega);

    std::size_t rows() const override { return m_; }
    std::size_t cols() const override { return n_; }
    std::size_t samples() const override { return omega_.size(); }

    std::vector<double> apply(const DenseMatrix& x) const override;
    DenseMatrix adjoint(std::span<const double> y) const override;

    const std::vector<MaskEntry>& omega() const { return omega_; }

private:
    std::size_t m_, n_;
    std::vector<MaskEntry> omega_;
};

/// Fast structured map: sign flip, zero-pad to the next power of two,
/// Walsh-Hadamard transform, subsample p rows, scale by 1/sqrt(p).
class StructuredMap final : public SensingMap {
public:
    StructuredMap(std::size_t m, std::size_t n, std::size_t p, std::uint64_t seed);

    std::size_t rows() const override { return m_; }
    std::size_t cols() const override { return n_; }
    std::size_t samples() const override { return p_; }
    std::uint64_t seed() const { return seed_; }

    std::vector<double> apply(const DenseMatrix& x) const override;
    DenseMatrix adjoint(std::span<const double> y) const override;

    std::size_t padded_length() const { return padded_; }
    const std::vector<std::size_t>& selected_rows() const { return selected_; }

private:
    std::size_t m_, n_, p_, padded_;
    std::uint64_t seed_;
    std::vector<double> sign_diagonal_;   // +-1, length padded_
    std::vector<std::size_t> selected_;   // p sorted distinct indices in [0, padded_)
};

/// In-place unnormalized Walsh-Hadamard transform; length must be a power
/// of two (self-inverse up to a factor of the length).
void fwht(std::span<double> v);

/// Empirical restricted-isometry bracket: min/max of | ||A(X)||^2 - 1 | over
/// random unit-Frobenius rank-r probes. A diagnostic, not a certificate.
struct RipBracket {
    double delta_low = 0.0;
    double delta_high = 0.0;
};

RipBracket estimate_rip(const SensingMap& map, std::size_t rank, std::size_t trials,
                        std::uint64_t seed);

/// Mask CSV exchange format: one "i,j" line per entry, 0-based.
void mask_to_csv(const MaskOperator& mask, std::ostream& out);
MaskOperator mask_from_csv(std::istream& in, std::size_t m, std::size_t n);

}  // namespace bfgd
