#pragma once

#include <string>

#include "bfgd/dense_matrix.hpp"

namespace bfgd {

/// Reads an 8-bit grayscale PGM (binary P5 or ASCII P2) and scales pixel
/// values to [0, 1] by the file's maxval. Malformed input is rejected with
/// a diagnostic naming the offending line or byte offset.
DenseMatrix read_pgm(const std::string& path);

/// Writes values in [0, 1] as binary P5 with maxval 255 (rounded).
void write_pgm(const std::string& path, const DenseMatrix& image);

}  // namespace bfgd
