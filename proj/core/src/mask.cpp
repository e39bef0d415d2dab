#include "mclnn/mask.hpp"

#include <stdexcept>

namespace mclnn {

void MaskSpec::validate() const {
    if (features < 1) {
        throw std::invalid_argument("MaskSpec: features must be >= 1, got " +
                                    std::to_string(features));
    }
    if (width < 1) {
        throw std::invalid_argument("MaskSpec: width must be >= 1, got " + std::to_string(width));
    }
    if (bandwidth < 1) {
        throw std::invalid_argument("MaskSpec: bandwidth must be >= 1, got " +
                                    std::to_string(bandwidth));
    }
    if (bandwidth > features) {
        throw std::invalid_argument("MaskSpec: bandwidth " + std::to_string(bandwidth) +
                                    " exceeds feature length " + std::to_string(features));
    }
    // overlap == bandwidth is the degenerate stride-l case and is admitted;
    // anything larger would re-cover the same cells.
    if (overlap > bandwidth) {
        throw std::invalid_argument("MaskSpec: overlap " + std::to_string(overlap) +
                                    " exceeds bandwidth " + std::to_string(bandwidth));
    }
    if (features + (bandwidth - overlap) <= 0) {
        throw std::invalid_argument("MaskSpec: step l + (bw - ov) must be positive");
    }
}

Mask build_mask(const MaskSpec& spec) {
    spec.validate();
    const std::int64_t l = spec.features;
    const std::int64_t e = spec.width;
    const std::int64_t cells = l * e;
    const std::int64_t step = l + (spec.bandwidth - spec.overlap);
    const std::int64_t groups = (cells + step - 1) / step;   // ceil(l*e / step)

    Mask mask;
    mask.spec = spec;
    mask.pattern = Matrix(static_cast<std::size_t>(l), static_cast<std::size_t>(e));
    for (std::int64_t g = 1; g <= groups; ++g) {
        const std::int64_t base = (g - 1) * step;
        for (std::int64_t a = 0; a < spec.bandwidth; ++a) {
            const std::int64_t lx = base + a;
            if (lx >= cells) break;
            // Column-major linearization: bands run down the columns.
            const std::size_t row = static_cast<std::size_t>(lx % l);
            const std::size_t col = static_cast<std::size_t>(lx / l);
            mask.pattern(row, col) = 1.0;
        }
    }
    return mask;
}

Matrix apply_mask(const Matrix& weights, const Mask& mask) {
    if (!weights.same_shape(mask.pattern)) {
        throw std::invalid_argument("apply_mask: shape mismatch, weights " +
                                    shape_string(weights) + " vs mask " +
                                    shape_string(mask.pattern));
    }
    Matrix out(weights.rows(), weights.cols());
    for (std::size_t i = 0; i < weights.size(); ++i) {
        // Exact zeros at masked cells, not a multiply, so signed zeros
        // cannot leak through.
        out.values()[i] = mask.pattern.values()[i] != 0.0 ? weights.values()[i] : 0.0;
    }
    return out;
}

MaskStats mask_stats(const Mask& mask) {
    MaskStats stats;
    const Matrix& p = mask.pattern;
    std::size_t ones = 0;
    stats.columns.resize(p.cols());
    for (std::size_t c = 0; c < p.cols(); ++c) {
        std::size_t run_start = 0;
        std::size_t run_len = 0;
        for (std::size_t r = 0; r < p.rows(); ++r) {
            if (p(r, c) != 0.0) {
                if (run_len == 0) run_start = r;
                ++run_len;
                ++ones;
            } else if (run_len > 0) {
                stats.columns[c].push_back({run_start, run_len});
                run_len = 0;
            }
        }
        if (run_len > 0) stats.columns[c].push_back({run_start, run_len});
    }
    stats.density = p.size() == 0 ? 0.0
                                  : static_cast<double>(ones) / static_cast<double>(p.size());
    return stats;
}

std::string mask_to_pgm(const Mask& mask) {
    const Matrix& p = mask.pattern;
    std::string out = "P2\n" + std::to_string(p.cols()) + " " + std::to_string(p.rows()) +
                      "\n255\n";
    for (std::size_t r = 0; r < p.rows(); ++r) {
        for (std::size_t c = 0; c < p.cols(); ++c) {
            if (c > 0) out += ' ';
            out += p(r, c) != 0.0 ? "255" : "0";
        }
        out += '\n';
    }
    return out;
}

std::string mask_to_csv(const Mask& mask) {
    const Matrix& p = mask.pattern;
    std::string out;
    for (std::size_t r = 0; r < p.rows(); ++r) {
        for (std::size_t c = 0; c < p.cols(); ++c) {
            if (c > 0) out += ',';
            out += p(r, c) != 0.0 ? '1' : '0';
        }
        out += '\n';
    }
    return out;
}

}  // namespace mclnn
