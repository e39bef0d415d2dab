#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace mclnn {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Bias-corrected first/second moment state for one flat parameter vector.
struct AdamState {
    explicit AdamState(std::size_t parameter_count, AdamConfig config = {})
        : m(parameter_count, 0.0), v(parameter_count, 0.0), config(config) {}

    std::vector<double> m;
    std::vector<double> v;
    std::int64_t t = 0;
    AdamConfig config;
};

/// One in-place ADAM update. Deterministic: same inputs give bitwise
/// identical outputs. Throws std::invalid_argument on length mismatch.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

}  // namespace mclnn
