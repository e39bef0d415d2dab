#include "mclnn/model.hpp"

#include <stdexcept>
#include <string>

namespace mclnn {

std::vector<std::string> ModelConfig::validate() const {
    std::vector<std::string> warnings;
    if (schema_version != kModelSchemaVersion) {
        throw std::invalid_argument("model config: unsupported schema_version " +
                                    std::to_string(schema_version));
    }
    if (input_features == 0) {
        throw std::invalid_argument("model config: input_features must be >= 1");
    }
    if (class_count < 2) {
        throw std::invalid_argument("model config: class_count must be >= 2, got " +
                                    std::to_string(class_count));
    }
    if (clnn_layers.empty()) {
        throw std::invalid_argument("model config: at least one conditional layer is required");
    }
    if (pooling.extra_frames < 1) {
        throw std::invalid_argument("model config: pooling.extra_frames must be >= 1");
    }
    std::size_t features = input_features;
    for (std::size_t i = 0; i < clnn_layers.size(); ++i) {
        const ClnnLayerConfig& layer = clnn_layers[i];
        const std::string where = "clnn layer " + std::to_string(i);
        if (layer.order < 0) {
            throw std::invalid_argument("model config: " + where + " has negative order");
        }
        if (layer.order == 0) {
            warnings.push_back(where + " has order 0; the layer degenerates to a per-frame "
                                       "dense layer");
        }
        if (layer.width == 0) {
            throw std::invalid_argument("model config: " + where + " has zero width");
        }
        if (layer.mask) {
            MaskSpec spec{static_cast<std::int64_t>(features),
                          static_cast<std::int64_t>(layer.width), layer.mask->bandwidth,
                          layer.mask->overlap};
            try {
                spec.validate();
            } catch (const std::invalid_argument& err) {
                throw std::invalid_argument("model config: " + where + ": " + err.what());
            }
        }
        features = layer.width;
    }
    for (std::size_t i = 0; i < dense_head.size(); ++i) {
        if (dense_head[i].width == 0) {
            throw std::invalid_argument("model config: dense layer " + std::to_string(i) +
                                        " has zero width");
        }
    }
    return warnings;
}

std::size_t segment_size(const ModelConfig& config) {
    std::size_t q = config.pooling.extra_frames;
    for (const ClnnLayerConfig& layer : config.clnn_layers) {
        q += static_cast<std::size_t>(2 * layer.order);
    }
    return q;
}

ShapePlan shape_plan(const ModelConfig& config) {
    config.validate();
    ShapePlan plan;
    plan.segment = segment_size(config);
    std::size_t frames = plan.segment;
    for (std::size_t i = 0; i < config.clnn_layers.size(); ++i) {
        const std::size_t consumed = static_cast<std::size_t>(2 * config.clnn_layers[i].order);
        if (frames < consumed + 1) {
            throw std::invalid_argument("shape_plan: clnn layer " + std::to_string(i) +
                                        " receives " + std::to_string(frames) +
                                        " frames but consumes " + std::to_string(consumed));
        }
        frames -= consumed;
        plan.frames_after.push_back(frames);
    }
    if (frames != config.pooling.extra_frames) {
        throw std::invalid_argument("shape_plan: " + std::to_string(frames) +
                                    " frames reach pooling, expected " +
                                    std::to_string(config.pooling.extra_frames));
    }
    plan.head_input_width = config.clnn_layers.back().width;
    return plan;
}

std::size_t ModelParams::parameter_count() const {
    std::size_t count = 0;
    for (const ClnnLayerParams& layer : clnn) {
        for (const Matrix& w : layer.weights) count += w.size();
        count += layer.bias.size();
    }
    for (const DenseParams& layer : head) {
        count += layer.weights.size() + layer.bias.size();
    }
    return count;
}

ModelParams build_model(const ModelConfig& config, Rng& rng) {
    config.validate();
    ModelParams params;
    params.pooling = config.pooling.statistic;
    std::size_t features = config.input_features;
    for (const ClnnLayerConfig& layer : config.clnn_layers) {
        std::optional<Mask> mask;
        if (layer.mask) {
            mask = build_mask(MaskSpec{static_cast<std::int64_t>(features),
                                       static_cast<std::int64_t>(layer.width),
                                       layer.mask->bandwidth, layer.mask->overlap});
        }
        params.clnn.push_back(init_clnn_layer(features, layer.width, layer.order,
                                              layer.transfer, std::move(mask), rng));
        features = layer.width;
    }
    for (const DenseLayerConfig& layer : config.dense_head) {
        params.head.push_back(init_dense_layer(features, layer.width, layer.transfer, rng));
        features = layer.width;
    }
    // Classifier affine; softmax follows in the forward pass.
    params.head.push_back(
        init_dense_layer(features, config.class_count, TransferKind::identity, rng));
    return params;
}

std::vector<double> predict(const ModelParams& params, const FrameBlock& segment) {
    FrameBlock block = segment;
    for (const ClnnLayerParams& layer : params.clnn) {
        block = clnn_forward(block, layer);
    }
    std::vector<double> x = global_pool(block, params.pooling);
    for (const DenseParams& layer : params.head) {
        x = dense_forward(x, layer);
    }
    return softmax(x);
}

std::vector<double> flatten_params(const ModelParams& params) {
    std::vector<double> flat;
    flat.reserve(params.parameter_count());
    for (const ClnnLayerParams& layer : params.clnn) {
        for (const Matrix& w : layer.weights) {
            flat.insert(flat.end(), w.values().begin(), w.values().end());
        }
        flat.insert(flat.end(), layer.bias.begin(), layer.bias.end());
    }
    for (const DenseParams& layer : params.head) {
        flat.insert(flat.end(), layer.weights.values().begin(), layer.weights.values().end());
        flat.insert(flat.end(), layer.bias.begin(), layer.bias.end());
    }
    return flat;
}

void unflatten_params(ModelParams& params, std::span<const double> flat) {
    if (flat.size() != params.parameter_count()) {
        throw std::invalid_argument("unflatten_params: got " + std::to_string(flat.size()) +
                                    " values, model has " +
                                    std::to_string(params.parameter_count()));
    }
    std::size_t pos = 0;
    auto take = [&](double* dst, std::size_t count) {
        std::copy(flat.begin() + static_cast<std::ptrdiff_t>(pos),
                  flat.begin() + static_cast<std::ptrdiff_t>(pos + count), dst);
        pos += count;
    };
    for (ClnnLayerParams& layer : params.clnn) {
        for (Matrix& w : layer.weights) take(w.data(), w.size());
        take(layer.bias.data(), layer.bias.size());
    }
    for (DenseParams& layer : params.head) {
        take(layer.weights.data(), layer.weights.size());
        take(layer.bias.data(), layer.bias.size());
    }
}

}  // namespace mclnn
