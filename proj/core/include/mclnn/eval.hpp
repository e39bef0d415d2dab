#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mclnn/dataset.hpp"
#include "mclnn/model.hpp"
#include "mclnn/training.hpp"

namespace mclnn {

enum class VoteKind { probability, product };

const char* vote_name(VoteKind kind);
VoteKind parse_vote(const std::string& name);

struct VoteResult {
    std::vector<double> clip_probs;
    std::size_t label = 0;
};

// Combines per-segment probability vectors into one clip decision.
// probability: per-class arithmetic mean, summed in sorted order so the
// result is independent of segment order; product: per-class sum of logs.
// Ties resolve to the lowest class index.
VoteResult vote(const std::vector<std::vector<double>>& segment_probs,
                VoteKind kind = VoteKind::probability);

class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::size_t class_count);

    void add(std::size_t truth, std::size_t predicted);
    std::int64_t at(std::size_t truth, std::size_t predicted) const;
    std::size_t class_count() const { return classes_; }
    std::int64_t total() const { return total_; }
    double accuracy() const;   // trace / total
    void merge(const ConfusionMatrix& other);

private:
    std::size_t classes_;
    std::vector<std::int64_t> counts_;   // row-major, rows = true class
    std::int64_t total_ = 0;
};

std::string confusion_to_csv(const ConfusionMatrix& cm);
std::string confusion_to_text(const ConfusionMatrix& cm);

struct ClipEvaluation {
    std::vector<std::size_t> predicted;   // parallel to the evaluated clips
    ConfusionMatrix confusion;
    double accuracy = 0.0;
    double mean_segment_loss = 0.0;
    std::size_t segment_count = 0;
};

// Standardizes each clip with the supplied statistics, cuts segments, runs
// the model on every segment, and votes per clip. The standardization
// parameters are the caller's (the training fold's), never refitted here.
ClipEvaluation evaluate_clips(const ModelParams& params, const std::vector<FeatureClip>& clips,
                              const ZScoreParams& zscore, std::size_t segment, std::size_t stride,
                              VoteKind vote_kind = VoteKind::probability);

struct FoldOutcome {
    int test_fold = 0;
    double accuracy = 0.0;
    TrainHistory history;
};

struct CvReport {
    std::vector<FoldOutcome> folds;
    double mean_accuracy = 0.0;
    ConfusionMatrix pooled;
    std::uint64_t seed = 0;
    std::vector<std::string> warnings;
};

using FoldCallback = std::function<void(const FoldOutcome&)>;

// Rotating k-fold protocol: fold f is the test set, fold (f+1) mod F the
// validation set, the rest train. With F = 2 the validation fold has to
// double as the training fold; a warning records that. Each fold trains with
// its own seed derived from the base seed, so folds may run concurrently
// (jobs > 1) without changing any result.
CvReport cross_validate(const ModelConfig& model_config, const TrainConfig& train_config,
                        const std::vector<FeatureClip>& clips, const std::vector<int>& fold_of,
                        int fold_count, int jobs = 1,
                        VoteKind vote_kind = VoteKind::probability,
                        const FoldCallback& on_fold = {});

std::string cv_report_to_json(const CvReport& report);

}  // namespace mclnn
