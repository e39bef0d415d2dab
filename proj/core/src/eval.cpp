#include "mclnn/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace mclnn {

const char* vote_name(VoteKind kind) {
    return kind == VoteKind::probability ? "probability" : "product";
}

VoteKind parse_vote(const std::string& name) {
    if (name == "probability") return VoteKind::probability;
    if (name == "product") return VoteKind::product;
    throw std::invalid_argument("unknown voting scheme \"" + name +
                                "\" (expected probability or product)");
}

VoteResult vote(const std::vector<std::vector<double>>& segment_probs, VoteKind kind) {
    if (segment_probs.empty()) throw std::invalid_argument("vote: no segment predictions");
    const std::size_t classes = segment_probs.front().size();
    for (const auto& p : segment_probs) {
        if (p.size() != classes) {
            throw std::invalid_argument("vote: prediction length " + std::to_string(p.size()) +
                                        " does not match " + std::to_string(classes));
        }
    }

    VoteResult result;
    result.clip_probs.assign(classes, 0.0);
    std::vector<double> column(segment_probs.size());
    for (std::size_t c = 0; c < classes; ++c) {
        for (std::size_t s = 0; s < segment_probs.size(); ++s) column[s] = segment_probs[s][c];
        // summing in sorted order makes the total independent of segment order
        std::sort(column.begin(), column.end());
        double sum = 0.0;
        if (kind == VoteKind::probability) {
            for (double v : column) sum += v;
            result.clip_probs[c] = sum / static_cast<double>(column.size());
        } else {
            for (double v : column) sum += std::log(std::max(v, 1e-300));
            result.clip_probs[c] = sum;
        }
    }

    result.label = 0;
    for (std::size_t c = 1; c < classes; ++c) {
        if (result.clip_probs[c] > result.clip_probs[result.label]) result.label = c;
    }
    return result;
}

ConfusionMatrix::ConfusionMatrix(std::size_t class_count) : classes_(class_count) {
    if (class_count == 0) throw std::invalid_argument("confusion matrix needs at least 1 class");
    counts_.assign(class_count * class_count, 0);
}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted) {
    if (truth >= classes_ || predicted >= classes_) {
        throw std::invalid_argument("confusion matrix: class index out of range (" +
                                    std::to_string(truth) + ", " + std::to_string(predicted) +
                                    ") for " + std::to_string(classes_) + " classes");
    }
    ++counts_[truth * classes_ + predicted];
    ++total_;
}

std::int64_t ConfusionMatrix::at(std::size_t truth, std::size_t predicted) const {
    if (truth >= classes_ || predicted >= classes_) {
        throw std::invalid_argument("confusion matrix: class index out of range");
    }
    return counts_[truth * classes_ + predicted];
}

double ConfusionMatrix::accuracy() const {
    if (total_ == 0) return 0.0;
    std::int64_t correct = 0;
    for (std::size_t c = 0; c < classes_; ++c) correct += counts_[c * classes_ + c];
    return static_cast<double>(correct) / static_cast<double>(total_);
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
    if (other.classes_ != classes_) {
        throw std::invalid_argument("confusion matrix: cannot merge " +
                                    std::to_string(other.classes_) + " classes into " +
                                    std::to_string(classes_));
    }
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
    total_ += other.total_;
}

std::string confusion_to_csv(const ConfusionMatrix& cm) {
    std::ostringstream out;
    out << "class";
    for (std::size_t c = 0; c < cm.class_count(); ++c) out << ',' << c;
    out << '\n';
    for (std::size_t t = 0; t < cm.class_count(); ++t) {
        out << t;
        for (std::size_t p = 0; p < cm.class_count(); ++p) out << ',' << cm.at(t, p);
        out << '\n';
    }
    return out.str();
}

std::string confusion_to_text(const ConfusionMatrix& cm) {
    std::size_t width = 5;
    for (std::size_t t = 0; t < cm.class_count(); ++t) {
        for (std::size_t p = 0; p < cm.class_count(); ++p) {
            width = std::max(width, std::to_string(cm.at(t, p)).size() + 2);
        }
    }
    std::ostringstream out;
    out << std::setw(10) << "true\\pred";
    for (std::size_t c = 0; c < cm.class_count(); ++c) {
        out << std::setw(static_cast<int>(width)) << c;
    }
    out << '\n';
    for (std::size_t t = 0; t < cm.class_count(); ++t) {
        out << std::setw(10) << t;
        for (std::size_t p = 0; p < cm.class_count(); ++p) {
            out << std::setw(static_cast<int>(width)) << cm.at(t, p);
        }
        out << '\n';
    }
    out << "clips " << cm.total() << ", accuracy " << std::fixed << std::setprecision(4)
        << cm.accuracy() << '\n';
    return out.str();
}

ClipEvaluation evaluate_clips(const ModelParams& params, const std::vector<FeatureClip>& clips,
                              const ZScoreParams& zscore, std::size_t segment, std::size_t stride,
                              VoteKind vote_kind) {
    if (clips.empty()) throw std::invalid_argument("evaluate_clips: no clips");
    if (params.head.empty()) throw std::invalid_argument("evaluate_clips: model has no classifier");
    const std::size_t classes = params.head.back().output_size();

    ClipEvaluation ev{{}, ConfusionMatrix(classes), 0.0, 0.0, 0};
    double loss_sum = 0.0;
    for (std::size_t i = 0; i < clips.size(); ++i) {
        const FeatureClip& clip = clips[i];
        if (clip.label < 0 || static_cast<std::size_t>(clip.label) >= classes) {
            throw std::invalid_argument("clip " + clip.id + ": label " +
                                        std::to_string(clip.label) + " out of range for " +
                                        std::to_string(classes) + " classes");
        }
        FeatureClip std_clip;
        std_clip.id = clip.id;
        std_clip.frames = apply_zscore(clip.frames, zscore);
        std_clip.label = clip.label;
        const auto segments = extract_segments(std_clip, i, segment, stride);

        std::vector<std::vector<double>> probs;
        probs.reserve(segments.size());
        for (const Segment& seg : segments) {
            probs.push_back(predict(params, seg.frames));
            loss_sum += cross_entropy(probs.back(), static_cast<std::size_t>(clip.label)).loss;
        }
        ev.segment_count += segments.size();

        const VoteResult v = vote(probs, vote_kind);
        ev.predicted.push_back(v.label);
        ev.confusion.add(static_cast<std::size_t>(clip.label), v.label);
    }
    ev.accuracy = ev.confusion.accuracy();
    ev.mean_segment_loss = loss_sum / static_cast<double>(ev.segment_count);
    return ev;
}

namespace {

struct FoldSplit {
    std::vector<FeatureClip> train;
    std::vector<FeatureClip> val;
    std::vector<FeatureClip> test;
};

FoldSplit split_fold(const std::vector<FeatureClip>& clips, const std::vector<int>& fold_of,
                     int test_fold, int fold_count) {
    const int val_fold = (test_fold + 1) % fold_count;
    FoldSplit split;
    for (std::size_t i = 0; i < clips.size(); ++i) {
        if (fold_of[i] == test_fold) {
            split.test.push_back(clips[i]);
        } else if (fold_of[i] == val_fold) {
            split.val.push_back(clips[i]);
        } else {
            split.train.push_back(clips[i]);
        }
    }
    if (fold_count == 2) split.train = split.val;
    return split;
}

}  // namespace

CvReport cross_validate(const ModelConfig& model_config, const TrainConfig& train_config,
                        const std::vector<FeatureClip>& clips, const std::vector<int>& fold_of,
                        int fold_count, int jobs, VoteKind vote_kind,
                        const FoldCallback& on_fold) {
    if (fold_count < 2) {
        throw std::invalid_argument("cross_validate: need at least 2 folds, got " +
                                    std::to_string(fold_count));
    }
    if (fold_of.size() != clips.size()) {
        throw std::invalid_argument("cross_validate: " + std::to_string(fold_of.size()) +
                                    " fold assignments for " + std::to_string(clips.size()) +
                                    " clips");
    }
    std::vector<std::size_t> per_fold(static_cast<std::size_t>(fold_count), 0);
    for (std::size_t i = 0; i < fold_of.size(); ++i) {
        if (fold_of[i] < 0 || fold_of[i] >= fold_count) {
            throw std::invalid_argument("cross_validate: clip " + clips[i].id + " has fold " +
                                        std::to_string(fold_of[i]) + ", valid range is 0.." +
                                        std::to_string(fold_count - 1));
        }
        ++per_fold[static_cast<std::size_t>(fold_of[i])];
    }
    for (int f = 0; f < fold_count; ++f) {
        if (per_fold[static_cast<std::size_t>(f)] == 0) {
            throw std::invalid_argument("cross_validate: fold " + std::to_string(f) +
                                        " has no clips");
        }
    }

    model_config.validate();
    train_config.validate();
    const std::size_t q = shape_plan(model_config).segment;

    CvReport report{{}, 0.0, ConfusionMatrix(model_config.class_count), train_config.seed, {}};
    if (fold_count == 2) {
        report.warnings.push_back(
            "2 folds: the validation fold doubles as the training fold, so model selection "
            "is not independent of training data");
    }

    report.folds.resize(static_cast<std::size_t>(fold_count));
    std::vector<ConfusionMatrix> fold_confusion(static_cast<std::size_t>(fold_count),
                                                ConfusionMatrix(model_config.class_count));
    std::vector<std::string> fold_errors(static_cast<std::size_t>(fold_count));

    std::mutex callback_mutex;
    std::atomic<int> next_fold{0};
    auto worker = [&]() {
        for (int f = next_fold.fetch_add(1); f < fold_count; f = next_fold.fetch_add(1)) {
            const auto fi = static_cast<std::size_t>(f);
            try {
                const FoldSplit split = split_fold(clips, fold_of, f, fold_count);
                TrainConfig fold_config = train_config;
                fold_config.seed = derive_seed(train_config.seed, static_cast<std::uint64_t>(f));
                const TrainResult trained =
                    train_model(model_config, fold_config, split.train, split.val);
                const std::size_t stride = effective_stride(fold_config, q);
                const ClipEvaluation ev = evaluate_clips(trained.params, split.test,
                                                         trained.zscore, q, stride, vote_kind);
                report.folds[fi] = FoldOutcome{f, ev.accuracy, trained.history};
                fold_confusion[fi] = ev.confusion;
                if (on_fold) {
                    std::lock_guard<std::mutex> lock(callback_mutex);
                    on_fold(report.folds[fi]);
                }
            } catch (const std::exception& err) {
                fold_errors[fi] = std::string("fold ") + std::to_string(f) + ": " + err.what();
            }
        }
    };

    const int workers = std::max(1, std::min(jobs, fold_count));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    for (const std::string& err : fold_errors) {
        if (!err.empty()) throw std::runtime_error("cross_validate aborted: " + err);
    }

    double sum = 0.0;
    for (const FoldOutcome& fold : report.folds) sum += fold.accuracy;
    report.mean_accuracy = sum / static_cast<double>(fold_count);
    for (const ConfusionMatrix& cm : fold_confusion) report.pooled.merge(cm);
    return report;
}

std::string cv_report_to_json(const CvReport& report) {
    nlohmann::json root;
    root["seed"] = report.seed;
    root["fold_count"] = report.folds.size();
    root["mean_accuracy"] = report.mean_accuracy;
    root["folds"] = nlohmann::json::array();
    for (const FoldOutcome& fold : report.folds) {
        nlohmann::json item;
        item["test_fold"] = fold.test_fold;
        item["accuracy"] = fold.accuracy;
        item["epochs_run"] = fold.history.rows.size();
        item["best_epoch"] = fold.history.best_epoch;
        item["stopped_early"] = fold.history.stopped_early;
        root["folds"].push_back(item);
    }
    root["confusion"] = nlohmann::json::array();
    for (std::size_t t = 0; t < report.pooled.class_count(); ++t) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t p = 0; p < report.pooled.class_count(); ++p) {
            row.push_back(report.pooled.at(t, p));
        }
        root["confusion"].push_back(row);
    }
    root["warnings"] = report.warnings;
    return root.dump(2) + "\n";
}

}  // namespace mclnn
