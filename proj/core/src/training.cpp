#include "mclnn/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mclnn/eval.hpp"

namespace mclnn {

void TrainConfig::validate() const {
    if (batch_size == 0) throw std::invalid_argument("train config: batch_size must be at least 1");
    if (!(dropout >= 0.0 && dropout < 1.0)) {
        throw std::invalid_argument("train config: dropout must lie in [0, 1), got " +
                                    std::to_string(dropout));
    }
    if (!(adam.learning_rate > 0.0)) {
        throw std::invalid_argument("train config: learning_rate must be positive");
    }
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
        throw std::invalid_argument("train config: beta1 and beta2 must lie in [0, 1)");
    }
    if (!(adam.epsilon > 0.0)) throw std::invalid_argument("train config: epsilon must be positive");
}

namespace {

using nlohmann::json;

template <typename T>
void read_optional(const json& obj, const std::string& key, T& out) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("train config: key \"" + key + "\" has the wrong type");
    }
}

}  // namespace

TrainConfig parse_train_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& err) {
        throw ConfigError(std::string("train config: invalid JSON: ") + err.what());
    }
    if (!root.is_object()) throw ConfigError("train config: top level must be an object");
    const std::set<std::string> allowed = {"epochs",  "batch_size", "learning_rate",
                                           "beta1",   "beta2",      "epsilon",
                                           "dropout", "patience",   "seed",
                                           "segment_stride"};
    for (auto it = root.begin(); it != root.end(); ++it) {
        if (!allowed.count(it.key())) {
            throw ConfigError("train config: unknown key \"" + it.key() + "\"");
        }
    }

    TrainConfig config;
    read_optional(root, "epochs", config.epochs);
    read_optional(root, "batch_size", config.batch_size);
    read_optional(root, "learning_rate", config.adam.learning_rate);
    read_optional(root, "beta1", config.adam.beta1);
    read_optional(root, "beta2", config.adam.beta2);
    read_optional(root, "epsilon", config.adam.epsilon);
    read_optional(root, "dropout", config.dropout);
    read_optional(root, "patience", config.patience);
    read_optional(root, "seed", config.seed);
    read_optional(root, "segment_stride", config.segment_stride);
    try {
        config.validate();
    } catch (const std::invalid_argument& err) {
        throw ConfigError(err.what());
    }
    return config;
}

TrainConfig load_train_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("train config: cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_train_config(buffer.str());
}

std::string train_config_to_json(const TrainConfig& config) {
    json root;
    root["epochs"] = config.epochs;
    root["batch_size"] = config.batch_size;
    root["learning_rate"] = config.adam.learning_rate;
    root["beta1"] = config.adam.beta1;
    root["beta2"] = config.adam.beta2;
    root["epsilon"] = config.adam.epsilon;
    root["dropout"] = config.dropout;
    root["patience"] = config.patience;
    root["seed"] = config.seed;
    root["segment_stride"] = config.segment_stride;
    return root.dump(2) + "\n";
}

CrossEntropy cross_entropy(std::span<const double> probs, std::size_t target) {
    if (target >= probs.size()) {
        throw std::invalid_argument("cross_entropy: target " + std::to_string(target) +
                                    " out of range for " + std::to_string(probs.size()) +
                                    " classes");
    }
    double sum = 0.0;
    for (double p : probs) sum += p;
    // A non-finite sum is not rejected here: it yields a non-finite loss, which
    // the training loop reports as divergence with its epoch and batch.
    if (std::isfinite(sum) && std::abs(sum - 1.0) > 1e-6) {
        throw std::invalid_argument("cross_entropy: probabilities sum to " + std::to_string(sum));
    }
    CrossEntropy out;
    out.loss = -std::log(std::max(probs[target], kCrossEntropyFloor));
    out.grad.assign(probs.begin(), probs.end());
    out.grad[target] -= 1.0;
    return out;
}

std::vector<double> dropout_mask(std::size_t size, double rate, Rng& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) {
        throw std::invalid_argument("dropout: rate must lie in [0, 1), got " +
                                    std::to_string(rate));
    }
    std::vector<double> mask(size, 0.0);
    const double keep_scale = 1.0 / (1.0 - rate);
    for (double& m : mask) {
        if (rng.next_double() >= rate) m = keep_scale;
    }
    return mask;
}

std::vector<double> dropout(std::span<const double> x, double rate, Rng& rng, bool training) {
    std::vector<double> out(x.begin(), x.end());
    if (!training || rate == 0.0) {
        if (!(rate >= 0.0 && rate < 1.0)) {
            throw std::invalid_argument("dropout: rate must lie in [0, 1), got " +
                                        std::to_string(rate));
        }
        return out;
    }
    const auto mask = dropout_mask(x.size(), rate, rng);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
    return out;
}

void write_history_csv(const std::string& path, const TrainHistory& history) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "epoch,train_loss,val_loss,val_acc\n";
    out.precision(12);
    for (const EpochRow& row : history.rows) {
        out << row.epoch << ',' << row.train_loss << ',' << row.val_loss << ',' << row.val_acc
            << '\n';
    }
    if (!out) throw std::runtime_error("short write to " + path);
}

std::size_t effective_stride(const TrainConfig& config, std::size_t segment) {
    if (config.segment_stride > 0) return config.segment_stride;
    return (segment + 1) / 2;
}

namespace {

// Activations of one segment's pass, kept for reverse mode. The block fed to
// conditional layer i is the segment itself for i = 0, clnn_out[i-1] after.
struct ForwardPass {
    std::vector<FrameBlock> clnn_out;
    std::vector<double> pooled;
    std::vector<std::vector<double>> head_inputs;    // post-dropout
    std::vector<std::vector<double>> head_outputs;
    std::vector<std::vector<double>> drop_masks;     // empty in inference mode
    std::vector<double> probs;
};

ForwardPass forward_cached(const ModelParams& params, const FrameBlock& segment, double rate,
                           Rng* rng) {
    ForwardPass fp;
    fp.clnn_out.reserve(params.clnn.size());
    const FrameBlock* block = &segment;
    for (const ClnnLayerParams& layer : params.clnn) {
        fp.clnn_out.push_back(clnn_forward(*block, layer));
        block = &fp.clnn_out.back();
    }
    fp.pooled = global_pool(*block, params.pooling);

    std::vector<double> x = fp.pooled;
    for (const DenseParams& layer : params.head) {
        if (rng) {
            auto mask = dropout_mask(x.size(), rate, *rng);
            for (std::size_t i = 0; i < x.size(); ++i) x[i] *= mask[i];
            fp.drop_masks.push_back(std::move(mask));
        }
        fp.head_inputs.push_back(x);
        x = dense_forward(x, layer);
        fp.head_outputs.push_back(x);
    }
    fp.probs = softmax(x);
    return fp;
}

ModelParams make_zero_grads(const ModelParams& params) {
    ModelParams grads;
    grads.pooling = params.pooling;
    for (const ClnnLayerParams& layer : params.clnn) {
        ClnnLayerParams g;
        g.order = layer.order;
        g.transfer = layer.transfer;
        for (const Matrix& w : layer.weights) g.weights.emplace_back(w.rows(), w.cols());
        g.bias.assign(layer.bias.size(), 0.0);
        grads.clnn.push_back(std::move(g));
    }
    for (const DenseParams& layer : params.head) {
        DenseParams g;
        g.weights = Matrix(layer.weights.rows(), layer.weights.cols());
        g.bias.assign(layer.bias.size(), 0.0);
        g.transfer = layer.transfer;
        grads.head.push_back(std::move(g));
    }
    return grads;
}

void zero_grads(ModelParams& grads) {
    for (ClnnLayerParams& layer : grads.clnn) {
        for (Matrix& w : layer.weights) std::fill(w.values().begin(), w.values().end(), 0.0);
        std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
    }
    for (DenseParams& layer : grads.head) {
        std::fill(layer.weights.values().begin(), layer.weights.values().end(), 0.0);
        std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
    }
}

void scale_grads(ModelParams& grads, double factor) {
    for (ClnnLayerParams& layer : grads.clnn) {
        for (Matrix& w : layer.weights) {
            for (double& v : w.values()) v *= factor;
        }
        for (double& b : layer.bias) b *= factor;
    }
    for (DenseParams& layer : grads.head) {
        for (double& v : layer.weights.values()) v *= factor;
        for (double& b : layer.bias) b *= factor;
    }
}

void add_into(Matrix& into, const Matrix& from) {
    auto& dst = into.values();
    const auto& src = from.values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void add_into(std::vector<double>& into, const std::vector<double>& from) {
    for (std::size_t i = 0; i < into.size(); ++i) into[i] += from[i];
}

// Accumulates one segment's gradients; returns its loss.
double backward_example(const ModelParams& params, const FrameBlock& segment,
                        const ForwardPass& fp, std::size_t target, ModelParams& grads) {
    CrossEntropy ce = cross_entropy(fp.probs, target);

    std::vector<double> up = std::move(ce.grad);
    for (std::size_t j = params.head.size(); j-- > 0;) {
        DenseGradients dg =
            dense_backward(fp.head_inputs[j], params.head[j], fp.head_outputs[j], up);
        add_into(grads.head[j].weights, dg.weights);
        add_into(grads.head[j].bias, dg.bias);
        up = std::move(dg.input);
        if (!fp.drop_masks.empty()) {
            for (std::size_t i = 0; i < up.size(); ++i) up[i] *= fp.drop_masks[j][i];
        }
    }

    const FrameBlock& last = fp.clnn_out.empty() ? segment : fp.clnn_out.back();
    FrameBlock gblock = global_pool_backward(last, params.pooling, up);
    for (std::size_t i = params.clnn.size(); i-- > 0;) {
        const FrameBlock& input = (i == 0) ? segment : fp.clnn_out[i - 1];
        ClnnGradients cg = clnn_backward(input, params.clnn[i], fp.clnn_out[i], gblock);
        for (std::size_t u = 0; u < cg.weights.size(); ++u) {
            add_into(grads.clnn[i].weights[u], cg.weights[u]);
        }
        add_into(grads.clnn[i].bias, cg.bias);
        gblock = std::move(cg.input);
    }
    return ce.loss;
}

std::vector<FeatureClip> standardized(const std::vector<FeatureClip>& clips,
                                      const ZScoreParams& zscore) {
    std::vector<FeatureClip> out;
    out.reserve(clips.size());
    for (const FeatureClip& clip : clips) {
        FeatureClip c;
        c.id = clip.id;
        c.frames = apply_zscore(clip.frames, zscore);
        c.label = clip.label;
        c.fold = clip.fold;
        out.push_back(std::move(c));
    }
    return out;
}

void check_labels(const std::vector<FeatureClip>& clips, std::size_t class_count,
                  const char* which) {
    for (const FeatureClip& clip : clips) {
        if (clip.label < 0 || static_cast<std::size_t>(clip.label) >= class_count) {
            throw std::invalid_argument(std::string(which) + " clip " + clip.id + ": label " +
                                        std::to_string(clip.label) + " out of range for " +
                                        std::to_string(class_count) + " classes");
        }
    }
}

}  // namespace

TrainResult train_model(const ModelConfig& model_config, const TrainConfig& train_config,
                        const std::vector<FeatureClip>& train_clips,
                        const std::vector<FeatureClip>& val_clips,
                        const EpochCallback& on_epoch) {
    model_config.validate();
    train_config.validate();
    if (train_clips.empty()) throw std::invalid_argument("train_model: no training clips");
    if (val_clips.empty()) throw std::invalid_argument("train_model: no validation clips");
    check_labels(train_clips, model_config.class_count, "training");
    check_labels(val_clips, model_config.class_count, "validation");

    const ShapePlan plan = shape_plan(model_config);
    const std::size_t q = plan.segment;
    const std::size_t stride = effective_stride(train_config, q);

    Rng rng(train_config.seed);
    ModelParams params = build_model(model_config, rng);

    const ZScoreParams zscore = fit_zscore(train_clips);
    const std::vector<FeatureClip> train_std = standardized(train_clips, zscore);
    const std::vector<Segment> segments = extract_all_segments(train_std, q, stride);

    std::vector<double> flat = flatten_params(params);
    AdamState adam(flat.size(), train_config.adam);
    ModelParams grads = make_zero_grads(params);
    std::vector<double> flat_grads;

    std::vector<std::size_t> order(segments.size());
    std::iota(order.begin(), order.end(), 0);

    TrainHistory history;
    double best_loss = std::numeric_limits<double>::infinity();
    std::vector<double> best_flat = flat;
    std::size_t since_best = 0;

    for (std::size_t epoch = 0; epoch < train_config.epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0.0;
        const std::size_t batches =
            (segments.size() + train_config.batch_size - 1) / train_config.batch_size;
        for (std::size_t b = 0; b < batches; ++b) {
            const std::size_t begin = b * train_config.batch_size;
            const std::size_t end = std::min(begin + train_config.batch_size, segments.size());
            zero_grads(grads);
            double batch_loss = 0.0;
            for (std::size_t s = begin; s < end; ++s) {
                const Segment& seg = segments[order[s]];
                const std::size_t target =
                    static_cast<std::size_t>(train_std[seg.clip_index].label);
                ForwardPass fp = forward_cached(params, seg.frames, train_config.dropout, &rng);
                batch_loss += backward_example(params, seg.frames, fp, target, grads);
            }
            if (!std::isfinite(batch_loss)) {
                throw DivergenceError("training diverged: non-finite loss at epoch " +
                                      std::to_string(epoch) + ", batch " + std::to_string(b));
            }
            scale_grads(grads, 1.0 / static_cast<double>(end - begin));
            flat_grads = flatten_params(grads);
            adam_step(flat, flat_grads, adam);
            unflatten_params(params, flat);
            loss_sum += batch_loss;
        }

        const ClipEvaluation val = evaluate_clips(params, val_clips, zscore, q, stride);
        EpochRow row;
        row.epoch = epoch;
        row.train_loss = loss_sum / static_cast<double>(segments.size());
        row.val_loss = val.mean_segment_loss;
        row.val_acc = val.accuracy;
        history.rows.push_back(row);
        if (on_epoch) on_epoch(row);

        if (row.val_loss < best_loss) {
            best_loss = row.val_loss;
            best_flat = flat;
            history.best_epoch = epoch;
            since_best = 0;
        } else {
            ++since_best;
            if (train_config.patience > 0 && since_best >= train_config.patience) {
                history.stopped_early = true;
                break;
            }
        }
    }

    unflatten_params(params, best_flat);
    TrainResult result;
    result.params = std::move(params);
    result.history = std::move(history);
    result.zscore = zscore;
    return result;
}

}  // namespace mclnn
