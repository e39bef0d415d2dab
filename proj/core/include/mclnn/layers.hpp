#pragma once

#include <optional>
#include <span>
#include <vector>

#include "mclnn/mask.hpp"
#include "mclnn/matrix.hpp"
#include "mclnn/rng.hpp"
#include "mclnn/transfer.hpp"

namespace mclnn {

/// A contiguous run of feature frames, time down the rows.
using FrameBlock = Matrix;

/// One conditional layer: a window of 2n+1 frames feeds each output frame,
/// every window offset with its own dedicated weight matrix. A present mask
/// makes the layer the masked variant; the mask is applied to the weights on
/// every pass rather than baked into storage.
struct ClnnLayerParams {
    int order = 1;                      // n, frames on each side of the middle one
    std::vector<Matrix> weights;        // 2n+1 matrices of shape l x e, offset u stored at u+n
    std::vector<double> bias;           // length e
    TransferKind transfer = TransferKind::sigmoid;
    std::optional<Mask> mask;

    int window() const { return 2 * order + 1; }
    std::size_t input_features() const { return weights.empty() ? 0 : weights.front().rows(); }
    std::size_t width() const { return bias.size(); }

    /// Shape and finiteness checks; throws std::invalid_argument.
    void validate() const;
};

/// Uniform initialization on [-s, s] with s = sqrt(6 / (l*d + e)); the fan-in
/// counts all window matrices because they sum into a single activation.
ClnnLayerParams init_clnn_layer(std::size_t input_features, std::size_t width, int order,
                                TransferKind transfer, std::optional<Mask> mask, Rng& rng);

/// Forward pass over a frame block: every window position produces one output
/// frame, so the block shrinks by 2n frames. Throws when the input is
/// shorter than the window ("segment shorter than window").
FrameBlock clnn_forward(const FrameBlock& input, const ClnnLayerParams& params);

struct ClnnGradients {
    std::vector<Matrix> weights;
    std::vector<double> bias;
    FrameBlock input;
};

/// Reverse-mode gradients of clnn_forward. `output` is the forward result for
/// the same input (transfer derivatives are evaluated from it). Masked weight
/// cells receive exactly-zero gradients.
ClnnGradients clnn_backward(const FrameBlock& input, const ClnnLayerParams& params,
                            const FrameBlock& output, const FrameBlock& upstream);

enum class PoolKind { mean, max };

const char* pool_name(PoolKind kind);
PoolKind parse_pool(const std::string& name);

/// Feature-wise aggregation across time. Rejects empty blocks.
std::vector<double> global_pool(const FrameBlock& input, PoolKind kind);

/// Mean splits the gradient uniformly; max routes it to the first argmax row.
FrameBlock global_pool_backward(const FrameBlock& input, PoolKind kind,
                                std::span<const double> upstream);

struct DenseParams {
    Matrix weights;               // in x out
    std::vector<double> bias;     // out
    TransferKind transfer = TransferKind::sigmoid;

    std::size_t input_size() const { return weights.rows(); }
    std::size_t output_size() const { return weights.cols(); }
};

DenseParams init_dense_layer(std::size_t input_size, std::size_t output_size,
                             TransferKind transfer, Rng& rng);

std::vector<double> dense_forward(std::span<const double> x, const DenseParams& params);

struct DenseGradients {
    Matrix weights;
    std::vector<double> bias;
    std::vector<double> input;
};

DenseGradients dense_backward(std::span<const double> x, const DenseParams& params,
                              std::span<const double> output,
                              std::span<const double> upstream);

/// Max-subtracted softmax; outputs sum to 1.
std::vector<double> softmax(std::span<const double> x);

}  // namespace mclnn
