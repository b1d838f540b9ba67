#pragma once

#include <cstdint>
#include <vector>

#include "bfgd/dense_matrix.hpp"

namespace bfgd {

/// Deterministic xoshiro256** generator. All randomized routines in this
/// library draw from it with an explicit 64-bit seed, so results are
/// reproducible across platforms (no std::*_distribution involved).
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    /// Uniform in [0, 1), 53-bit resolution.
    double uniform();

    double uniform(double lo, double hi);

    /// Standard normal via Box-Muller; one spare value is cached.
    double gaussian();

    /// Unbiased integer in [0, n); n must be positive.
    std::uint64_t below(std::uint64_t n);

    /// Derives an independent stream seed (splitmix64 of seed ^ tag).
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t tag);

private:
    std::uint64_t state_[4];
    double spare_ = 0.0;
    bool has_spare_ = false;
};

DenseMatrix gaussian_matrix(Rng& rng, std::size_t rows, std::size_t cols);
DenseMatrix uniform_matrix(Rng& rng, std::size_t rows, std::size_t cols, double lo, double hi);

/// k distinct values from [0, n), sorted ascending. Partial Fisher-Yates.
std::vector<std::size_t> sample_without_replacement(Rng& rng, std::size_t n, std::size_t k);

}  // namespace bfgd
