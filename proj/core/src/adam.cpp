#include "mclnn/adam.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mclnn {

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
    if (params.size() != grads.size() || params.size() != state.m.size() ||
        params.size() != state.v.size()) {
        throw std::invalid_argument(
            "adam_step: length mismatch (params " + std::to_string(params.size()) + ", grads " +
            std::to_string(grads.size()) + ", state " + std::to_string(state.m.size()) + ")");
    }
    const AdamConfig& c = state.config;
    state.t += 1;
    const double bias1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.t));
    const double bias2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = c.beta1 * state.m[i] + (1.0 - c.beta1) * grads[i];
        state.v[i] = c.beta2 * state.v[i] + (1.0 - c.beta2) * grads[i] * grads[i];
        const double m_hat = state.m[i] / bias1;
        const double v_hat = state.v[i] / bias2;
        params[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
}

}  // namespace mclnn
