#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mclnn/layers.hpp"
#include "mclnn/mask.hpp"
#include "mclnn/rng.hpp"
#include "mclnn/transfer.hpp"

namespace mclnn {

inline constexpr int kModelSchemaVersion = 1;

struct MaskSettings {
    std::int64_t bandwidth = 0;
    std::int64_t overlap = 0;
};

struct ClnnLayerConfig {
    int order = 1;
    std::size_t width = 0;
    std::optional<MaskSettings> mask;
    TransferKind transfer = TransferKind::sigmoid;
};

struct PoolingConfig {
    PoolKind statistic = PoolKind::mean;
    std::size_t extra_frames = 1;   // k, frames surviving the conditional stack
};

struct DenseLayerConfig {
    std::size_t width = 0;
    TransferKind transfer = TransferKind::sigmoid;
};

/// Declarative description of a full network: conditional stack, global
/// pooling, dense head, and the softmax classifier implied by class_count.
struct ModelConfig {
    int schema_version = kModelSchemaVersion;
    std::size_t input_features = 0;              // l
    std::size_t class_count = 0;
    std::vector<ClnnLayerConfig> clnn_layers;
    PoolingConfig pooling;
    std::vector<DenseLayerConfig> dense_head;

    /// Throws std::invalid_argument naming the offending field or layer.
    /// Returns human-readable warnings (e.g. a layer with order 0).
    std::vector<std::string> validate() const;
};

/// Minimum number of frames a segment must carry so that exactly
/// pooling.extra_frames survive the conditional stack: k + sum of 2n per layer.
std::size_t segment_size(const ModelConfig& config);

struct ShapePlan {
    std::size_t segment = 0;                    // q
    std::vector<std::size_t> frames_after;      // frame count after each conditional layer
    std::size_t head_input_width = 0;           // pooled vector length
};

ShapePlan shape_plan(const ModelConfig& config);

/// All trainable parameters of a model. The classifier is the final entry of
/// `head` (identity transfer; softmax is applied by the forward pass).
struct ModelParams {
    std::vector<ClnnLayerParams> clnn;
    PoolKind pooling = PoolKind::mean;
    std::vector<DenseParams> head;

    std::size_t parameter_count() const;
};

/// Allocates and initializes parameters; masks are built once here.
/// Identical seeds produce bitwise-identical parameters.
ModelParams build_model(const ModelConfig& config, Rng& rng);

/// Deterministic feedforward map from one segment to class probabilities.
std::vector<double> predict(const ModelParams& params, const FrameBlock& segment);

/// Flattening order: per conditional layer the window matrices u = -n..n
/// row-major then the bias, then per dense layer (classifier last) the weight
/// matrix row-major then the bias. Checkpoints use the same order.
std::vector<double> flatten_params(const ModelParams& params);
void unflatten_params(ModelParams& params, std::span<const double> flat);

// JSON config file interface. Unknown keys are hard errors.
ModelConfig parse_model_config(const std::string& json_text);
ModelConfig load_model_config(const std::string& path);
std::string model_config_to_json(const ModelConfig& config);

/// Raised on malformed or out-of-schema configuration files.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace mclnn
