#pragma once

#include <compare>
#include <cstddef>

namespace bfgd {

/// One sampled matrix position.
struct MaskEntry {
    std::size_t row = 0;
    std::size_t col = 0;

    friend auto operator<=>(const MaskEntry&, const MaskEntry&) = default;
};

/// A matrix position with a +1/-1 label attached.
struct SignObservation {
    std::size_t row = 0;
    std::size_t col = 0;
    int label = 1;

    friend auto operator<=>(const SignObservation&, const SignObservation&) = default;
};

}  // namespace bfgd
