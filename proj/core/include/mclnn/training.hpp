#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mclnn/adam.hpp"
#include "mclnn/dataset.hpp"
#include "mclnn/model.hpp"

namespace mclnn {

struct TrainConfig {
    std::size_t epochs = 500;      // 0 is allowed: evaluate the initialized model untrained
    std::size_t batch_size = 100;
    AdamConfig adam;
    double dropout = 0.5;          // fraction of units silenced while training
    std::size_t patience = 20;     // stop after this many epochs without val-loss
                                   // improvement; 0 disables early stopping
    std::uint64_t seed = 42;
    std::size_t segment_stride = 0;   // 0: half a segment, rounded up

    void validate() const;
};

// JSON file interface; unknown keys are hard errors.
TrainConfig parse_train_config(const std::string& json_text);
TrainConfig load_train_config(const std::string& path);
std::string train_config_to_json(const TrainConfig& config);

inline constexpr double kCrossEntropyFloor = 1e-12;

struct CrossEntropy {
    double loss = 0.0;
    std::vector<double> grad;   // wrt pre-softmax inputs: probs - onehot
};

// Categorical cross-entropy against a single target class. `probs` must be a
// probability vector (sums to 1 within 1e-6); the loss clamps at
// -ln(kCrossEntropyFloor) instead of reaching infinity.
CrossEntropy cross_entropy(std::span<const double> probs, std::size_t target);

// Inverted dropout scale factors: each entry is 0 with probability `rate`,
// otherwise 1/(1-rate), so the expected value of x * mask equals x.
std::vector<double> dropout_mask(std::size_t size, double rate, Rng& rng);

// Applies dropout to a copy of x. Inference mode is the identity.
std::vector<double> dropout(std::span<const double> x, double rate, Rng& rng, bool training);

struct EpochRow {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_acc = 0.0;
};

struct TrainHistory {
    std::vector<EpochRow> rows;
    std::size_t best_epoch = 0;
    bool stopped_early = false;
};

// CSV with header epoch,train_loss,val_loss,val_acc and LF line endings.
void write_history_csv(const std::string& path, const TrainHistory& history);

// Non-finite training loss; the message names the epoch and batch.
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TrainResult {
    ModelParams params;      // snapshot from the best-validation-loss epoch
    TrainHistory history;
    ZScoreParams zscore;     // fitted on the training clips only
};

using EpochCallback = std::function<void(const EpochRow&)>;

// Mini-batch ADAM over shuffled segments with per-epoch validation. Fits
// standardization on the training clips, applies it to both sets, trains
// until the epoch cap or until validation loss has not improved for
// `patience` epochs, and returns the best-epoch parameters. Every run with
// the same inputs and seed produces bitwise-identical results.
TrainResult train_model(const ModelConfig& model_config, const TrainConfig& train_config,
                        const std::vector<FeatureClip>& train_clips,
                        const std::vector<FeatureClip>& val_clips,
                        const EpochCallback& on_epoch = {});

// Stride actually used for cutting segments: explicit value, or half a
// segment rounded up when the config leaves it at 0.
std::size_t effective_stride(const TrainConfig& config, std::size_t segment);

}  // namespace mclnn
