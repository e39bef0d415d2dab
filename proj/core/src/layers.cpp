#include "mclnn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mclnn {

void ClnnLayerParams::validate() const {
    if (order < 0) throw std::invalid_argument("ClnnLayerParams: order must be >= 0");
    if (weights.size() != static_cast<std::size_t>(window())) {
        throw std::invalid_argument("ClnnLayerParams: expected " + std::to_string(window()) +
                                    " weight matrices, got " + std::to_string(weights.size()));
    }
    for (const Matrix& w : weights) {
        if (!w.same_shape(weights.front())) {
            throw std::invalid_argument("ClnnLayerParams: weight matrices differ in shape");
        }
        if (w.cols() != bias.size()) {
            throw std::invalid_argument("ClnnLayerParams: weight columns " +
                                        std::to_string(w.cols()) + " do not match bias length " +
                                        std::to_string(bias.size()));
        }
        if (!w.all_finite()) {
            throw std::invalid_argument("ClnnLayerParams: non-finite weight");
        }
    }
    if (mask && !mask->pattern.same_shape(weights.front())) {
        throw std::invalid_argument("ClnnLayerParams: mask shape " +
                                    shape_string(mask->pattern) + " does not match weights " +
                                    shape_string(weights.front()));
    }
}

ClnnLayerParams init_clnn_layer(std::size_t input_features, std::size_t width, int order,
                                TransferKind transfer, std::optional<Mask> mask, Rng& rng) {
    ClnnLayerParams params;
    params.order = order;
    params.transfer = transfer;
    params.mask = std::move(mask);
    const std::size_t d = static_cast<std::size_t>(2 * order + 1);
    const double span = std::sqrt(6.0 / (static_cast<double>(input_features * d) +
                                         static_cast<double>(width)));
    params.weights.reserve(d);
    for (std::size_t u = 0; u < d; ++u) {
        Matrix w(input_features, width);
        for (double& v : w.values()) v = rng.uniform(-span, span);
        if (params.mask) w = apply_mask(w, *params.mask);
        params.weights.push_back(std::move(w));
    }
    params.bias.assign(width, 0.0);
    params.validate();
    return params;
}

namespace {

/// Masked weight views for one pass. Copies only when a mask is present.
std::vector<Matrix> effective_weights(const ClnnLayerParams& params) {
    if (!params.mask) return {};
    std::vector<Matrix> masked;
    masked.reserve(params.weights.size());
    for (const Matrix& w : params.weights) masked.push_back(apply_mask(w, *params.mask));
    return masked;
}

}  // namespace

FrameBlock clnn_forward(const FrameBlock& input, const ClnnLayerParams& params) {
    params.validate();
    const std::size_t l = params.input_features();
    const std::size_t e = params.width();
    const int n = params.order;
    if (input.cols() != l) {
        throw std::invalid_argument("clnn_forward: input has " + std::to_string(input.cols()) +
                                    " features, layer expects " + std::to_string(l));
    }
    if (input.rows() < static_cast<std::size_t>(params.window())) {
        throw std::invalid_argument("clnn_forward: segment shorter than window (" +
                                    std::to_string(input.rows()) + " frames < " +
                                    std::to_string(params.window()) + ")");
    }
    const std::size_t out_frames = input.rows() - static_cast<std::size_t>(2 * n);

    const std::vector<Matrix> masked = effective_weights(params);
    const std::vector<Matrix>& weights = params.mask ? masked : params.weights;

    FrameBlock out(out_frames, e);
    for (std::size_t t = 0; t < out_frames; ++t) {
        std::copy(params.bias.begin(), params.bias.end(), out.row(t).begin());
    }
    // Window offsets accumulate in a fixed order, u = -n .. n.
    for (int u = -n; u <= n; ++u) {
        const Matrix& w = weights[static_cast<std::size_t>(u + n)];
        for (std::size_t t = 0; t < out_frames; ++t) {
            const double* frame = input.row(t + static_cast<std::size_t>(n + u)).data();
            double* acc = out.row(t).data();
            for (std::size_t i = 0; i < l; ++i) {
                const double xi = frame[i];
                const double* wrow = w.data() + i * e;
                for (std::size_t j = 0; j < e; ++j) acc[j] += xi * wrow[j];
            }
        }
    }
    for (double& v : out.values()) v = transfer_scalar(params.transfer, v);
    return out;
}

ClnnGradients clnn_backward(const FrameBlock& input, const ClnnLayerParams& params,
                            const FrameBlock& output, const FrameBlock& upstream) {
    params.validate();
    const std::size_t l = params.input_features();
    const std::size_t e = params.width();
    const int n = params.order;
    const std::size_t out_frames = input.rows() - static_cast<std::size_t>(2 * n);
    if (output.rows() != out_frames || output.cols() != e) {
        throw std::invalid_argument("clnn_backward: output shape " + shape_string(output) +
                                    " does not match expected " + std::to_string(out_frames) +
                                    "x" + std::to_string(e));
    }
    if (!upstream.same_shape(output)) {
        throw std::invalid_argument("clnn_backward: upstream shape " + shape_string(upstream) +
                                    " does not match output " + shape_string(output));
    }

    // delta = upstream * f'(preactivation), with f' read off the output.
    Matrix delta(out_frames, e);
    for (std::size_t i = 0; i < delta.size(); ++i) {
        delta.values()[i] = upstream.values()[i] *
                            transfer_derivative_from_output(params.transfer, output.values()[i]);
    }

    ClnnGradients grads;
    grads.bias.assign(e, 0.0);
    for (std::size_t t = 0; t < out_frames; ++t) {
        const double* drow = delta.row(t).data();
        for (std::size_t j = 0; j < e; ++j) grads.bias[j] += drow[j];
    }

    const std::vector<Matrix> masked = effective_weights(params);
    const std::vector<Matrix>& weights = params.mask ? masked : params.weights;

    grads.input = FrameBlock(input.rows(), l);
    grads.weights.reserve(weights.size());
    for (int u = -n; u <= n; ++u) {
        const Matrix& w = weights[static_cast<std::size_t>(u + n)];
        Matrix gw(l, e);
        for (std::size_t t = 0; t < out_frames; ++t) {
            const std::size_t in_row = t + static_cast<std::size_t>(n + u);
            const double* frame = input.row(in_row).data();
            const double* drow = delta.row(t).data();
            double* gin = grads.input.row(in_row).data();
            for (std::size_t i = 0; i < l; ++i) {
                const double xi = frame[i];
                double* gwrow = gw.data() + i * e;
                const double* wrow = w.data() + i * e;
                double acc = 0.0;
                for (std::size_t j = 0; j < e; ++j) {
                    gwrow[j] += xi * drow[j];
                    acc += drow[j] * wrow[j];
                }
                gin[i] += acc;
            }
        }
        if (params.mask) gw = apply_mask(gw, *params.mask);
        grads.weights.push_back(std::move(gw));
    }
    return grads;
}

const char* pool_name(PoolKind kind) { return kind == PoolKind::mean ? "mean" : "max"; }

PoolKind parse_pool(const std::string& name) {
    if (name == "mean") return PoolKind::mean;
    if (name == "max") return PoolKind::max;
    throw std::invalid_argument("unknown pooling statistic \"" + name +
                                "\" (expected mean or max)");
}

std::vector<double> global_pool(const FrameBlock& input, PoolKind kind) {
    if (input.rows() == 0 || input.cols() == 0) {
        throw std::invalid_argument("global_pool: empty frame block");
    }
    std::vector<double> out(input.cols());
    if (kind == PoolKind::mean) {
        for (std::size_t r = 0; r < input.rows(); ++r) {
            const double* row = input.row(r).data();
            for (std::size_t c = 0; c < input.cols(); ++c) out[c] += row[c];
        }
        const double inv = 1.0 / static_cast<double>(input.rows());
        for (double& v : out) v *= inv;
    } else {
        for (std::size_t c = 0; c < input.cols(); ++c) out[c] = input(0, c);
        for (std::size_t r = 1; r < input.rows(); ++r) {
            const double* row = input.row(r).data();
            for (std::size_t c = 0; c < input.cols(); ++c) out[c] = std::max(out[c], row[c]);
        }
    }
    return out;
}

FrameBlock global_pool_backward(const FrameBlock& input, PoolKind kind,
                                std::span<const double> upstream) {
    if (upstream.size() != input.cols()) {
        throw std::invalid_argument("global_pool_backward: upstream length " +
                                    std::to_string(upstream.size()) + " does not match " +
                                    std::to_string(input.cols()) + " features");
    }
    FrameBlock grads(input.rows(), input.cols());
    if (kind == PoolKind::mean) {
        const double inv = 1.0 / static_cast<double>(input.rows());
        for (std::size_t r = 0; r < input.rows(); ++r) {
            for (std::size_t c = 0; c < input.cols(); ++c) grads(r, c) = upstream[c] * inv;
        }
    } else {
        for (std::size_t c = 0; c < input.cols(); ++c) {
            std::size_t best = 0;
            for (std::size_t r = 1; r < input.rows(); ++r) {
                if (input(r, c) > input(best, c)) best = r;   // ties keep the first index
            }
            grads(best, c) = upstream[c];
        }
    }
    return grads;
}

DenseParams init_dense_layer(std::size_t input_size, std::size_t output_size,
                             TransferKind transfer, Rng& rng) {
    DenseParams params;
    params.transfer = transfer;
    const double span = std::sqrt(6.0 / static_cast<double>(input_size + output_size));
    params.weights = Matrix(input_size, output_size);
    for (double& v : params.weights.values()) v = rng.uniform(-span, span);
    params.bias.assign(output_size, 0.0);
    return params;
}

std::vector<double> dense_forward(std::span<const double> x, const DenseParams& params) {
    if (x.size() != params.input_size()) {
        throw std::invalid_argument("dense_forward: input length " + std::to_string(x.size()) +
                                    " does not match weights " + shape_string(params.weights));
    }
    std::vector<double> out(params.bias);
    const std::size_t e = params.output_size();
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double xi = x[i];
        const double* wrow = params.weights.data() + i * e;
        for (std::size_t j = 0; j < e; ++j) out[j] += xi * wrow[j];
    }
    for (double& v : out) v = transfer_scalar(params.transfer, v);
    return out;
}

DenseGradients dense_backward(std::span<const double> x, const DenseParams& params,
                              std::span<const double> output,
                              std::span<const double> upstream) {
    if (x.size() != params.input_size() || output.size() != params.output_size() ||
        upstream.size() != params.output_size()) {
        throw std::invalid_argument("dense_backward: shape mismatch against weights " +
                                    shape_string(params.weights));
    }
    const std::size_t e = params.output_size();
    std::vector<double> delta(e);
    for (std::size_t j = 0; j < e; ++j) {
        delta[j] = upstream[j] * transfer_derivative_from_output(params.transfer, output[j]);
    }
    DenseGradients grads;
    grads.bias = delta;
    grads.weights = Matrix(x.size(), e);
    grads.input.assign(x.size(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        double* gw = grads.weights.data() + i * e;
        const double* wrow = params.weights.data() + i * e;
        double acc = 0.0;
        for (std::size_t j = 0; j < e; ++j) {
            gw[j] = x[i] * delta[j];
            acc += wrow[j] * delta[j];
        }
        grads.input[i] = acc;
    }
    return grads;
}

std::vector<double> softmax(std::span<const double> x) {
    if (x.empty()) throw std::invalid_argument("softmax: empty input");
    const double peak = *std::max_element(x.begin(), x.end());
    std::vector<double> out(x.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = std::exp(x[i] - peak);
        sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
}

}  // namespace mclnn
