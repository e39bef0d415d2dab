#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mclnn/matrix.hpp"

namespace mclnn {

/// Parameters of a filterbank-patterned binary mask over an l-by-e weight
/// matrix: bands of `bandwidth` consecutive ones run down the columns of the
/// column-major linearization, successive bands shifted by
/// l + (bandwidth - overlap). Negative overlap leaves gaps between bands.
struct MaskSpec {
    std::int64_t features = 0;    // l, rows
    std::int64_t width = 0;       // e, columns
    std::int64_t bandwidth = 0;   // bw, ones per band
    std::int64_t overlap = 0;     // ov, may be negative

    /// Throws std::invalid_argument naming the violated bound.
    void validate() const;
};

struct Mask {
    Matrix pattern;   // l x e, entries exactly 0.0 or 1.0
    MaskSpec spec;
};

/// Builds the banded pattern from its spec. Deterministic and total on the
/// validated domain; linear indices past l*e are skipped.
Mask build_mask(const MaskSpec& spec);

/// Elementwise product of weights and pattern; shapes must match.
Matrix apply_mask(const Matrix& weights, const Mask& mask);

struct ColumnBand {
    std::size_t start = 0;   // first row of a maximal run of ones
    std::size_t length = 0;
};

struct MaskStats {
    double density = 0.0;                            // ones / (l*e)
    std::vector<std::vector<ColumnBand>> columns;    // maximal runs per column
};

MaskStats mask_stats(const Mask& mask);

/// ASCII PGM (P2) dump, one pixel per cell, 0 -> 0 and 1 -> 255.
/// Width is the hidden dimension e, height the feature dimension l.
std::string mask_to_pgm(const Mask& mask);

/// CSV of 0/1 cells, one mask row per line, LF endings.
std::string mask_to_csv(const Mask& mask);

}  // namespace mclnn
