#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mclnn/checkpoint.hpp"
#include "mclnn/dataset.hpp"
#include "mclnn/dsp.hpp"
#include "mclnn/eval.hpp"
#include "mclnn/mask.hpp"
#include "mclnn/model.hpp"
#include "mclnn/training.hpp"
#include "mclnn/wav.hpp"

namespace fs = std::filesystem;
using namespace mclnn;

namespace {

enum LogLevel { kQuiet = 0, kInfo = 1, kDebug = 2 };
LogLevel g_log = kInfo;

bool init_log_level(std::string& error) {
    const char* env = std::getenv("MCLNN_LOG");
    if (!env) return true;
    const std::string value = env;
    if (value == "quiet") {
        g_log = kQuiet;
    } else if (value == "info") {
        g_log = kInfo;
    } else if (value == "debug") {
        g_log = kDebug;
    } else {
        error = "MCLNN_LOG must be quiet, info, or debug (got \"" + value + "\")";
        return false;
    }
    return true;
}

void log_info(const std::string& msg) {
    if (g_log >= kInfo) std::cout << msg << '\n';
}

void log_debug(const std::string& msg) {
    if (g_log >= kDebug) std::cout << msg << '\n';
}

std::string fmt(double value, int precision = 4) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(precision) << value;
    return out.str();
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << content;
    if (!out) throw std::runtime_error("short write to " + path);
}

ModelConfig load_model_config_with_warnings(const std::string& path) {
    const ModelConfig config = load_model_config(path);
    for (const std::string& w : config.validate()) std::cerr << "warning: " << w << '\n';
    return config;
}

// ---------------------------------------------------------------- preprocess

struct PreprocessOpts {
    std::string audio_dir;
    std::string index;
    std::string out;
    std::size_t n_fft = 2048;
    std::size_t hop = 1024;
    std::size_t mels = 256;
    int folds = 0;   // 0 keeps whatever the input index says
    std::uint64_t seed = 42;
    int jobs = 1;
};

int run_preprocess(const PreprocessOpts& opt) {
    const std::vector<IndexEntry> entries = read_index(opt.index);
    if (entries.empty()) throw std::runtime_error("no clips in " + opt.index);
    fs::create_directories(opt.out);

    const StftConfig stft{opt.n_fft, opt.hop};
    std::vector<IndexEntry> produced(entries.size());
    std::vector<std::string> failures(entries.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t i = next.fetch_add(1); i < entries.size(); i = next.fetch_add(1)) {
            const IndexEntry& entry = entries[i];
            try {
                if (entry.id.find_first_of("/\\") != std::string::npos) {
                    throw std::runtime_error("id contains a path separator");
                }
                if (entry.label < 0 || entry.label > 0xFFFF) {
                    throw std::runtime_error("label " + std::to_string(entry.label) +
                                             " does not fit the container field");
                }
                const AudioBuffer audio =
                    read_wav((fs::path(opt.audio_dir) / entry.path).string());
                const Matrix features = log_mel_spectrogram(audio, opt.mels, stft);
                const std::string name = entry.id + ".mcln";
                write_feature_clip((fs::path(opt.out) / name).string(), features,
                                   static_cast<std::uint16_t>(entry.label));
                produced[i] = IndexEntry{entry.id, name, entry.label, entry.fold};
            } catch (const std::exception& err) {
                failures[i] = entry.id + ": " + err.what();
            }
        }
    };

    const int workers = std::max(1, std::min<int>(opt.jobs, static_cast<int>(entries.size())));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    std::size_t failed = 0;
    std::vector<IndexEntry> good;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (failures[i].empty()) {
            good.push_back(produced[i]);
        } else {
            std::cerr << "preprocess: " << failures[i] << '\n';
            ++failed;
        }
    }
    if (good.empty()) throw std::runtime_error("preprocess: every clip failed");

    if (opt.folds > 0) {
        std::vector<int> labels;
        labels.reserve(good.size());
        for (const IndexEntry& e : good) labels.push_back(e.label);
        const FoldAssignment assignment = make_folds(labels, opt.folds, opt.seed);
        for (const std::string& w : assignment.warnings) std::cerr << "warning: " << w << '\n';
        for (std::size_t i = 0; i < good.size(); ++i) good[i].fold = assignment.fold[i];
        log_info("assigned " + std::to_string(opt.folds) + " stratified folds (seed " +
                 std::to_string(opt.seed) + ")");
    }

    write_index((fs::path(opt.out) / "index.csv").string(), good);
    log_info("wrote " + std::to_string(good.size()) + " feature clips to " + opt.out);
    if (failed > 0) {
        std::cerr << "preprocess: " << failed << " of " << entries.size() << " clips failed\n";
        return 2;
    }
    return 0;
}

// ---------------------------------------------------------------------- mask

struct MaskOpts {
    std::int64_t l = 256;
    std::int64_t e = 220;
    std::int64_t bw = 40;
    std::int64_t ov = -10;
    std::string out;
    std::string csv;
};

int run_mask(const MaskOpts& opt) {
    const Mask mask = build_mask(MaskSpec{opt.l, opt.e, opt.bw, opt.ov});
    if (!opt.out.empty()) write_text(opt.out, mask_to_pgm(mask));
    if (!opt.csv.empty()) write_text(opt.csv, mask_to_csv(mask));

    std::size_t ones = 0;
    for (double v : mask.pattern.values()) ones += (v != 0.0);
    const MaskStats stats = mask_stats(mask);
    std::cout << "mask " << opt.l << "x" << opt.e << " ones " << ones << " density "
              << fmt(stats.density, 6) << '\n';
    return 0;
}

// --------------------------------------------------------------------- train

struct TrainOpts {
    std::string model_config;
    std::string train_config;
    std::string data;
    std::string out;
    int val_fold = 0;
    std::vector<int> exclude;
    std::uint64_t seed = 0;
};

int run_train(const TrainOpts& opt, bool seed_overridden) {
    const ModelConfig model = load_model_config_with_warnings(opt.model_config);
    TrainConfig config =
        opt.train_config.empty() ? TrainConfig{} : load_train_config(opt.train_config);
    if (seed_overridden) config.seed = opt.seed;

    const std::vector<FeatureClip> clips = load_clips(opt.data);
    std::vector<FeatureClip> train_clips;
    std::vector<FeatureClip> val_clips;
    for (const FeatureClip& clip : clips) {
        if (clip.fold == opt.val_fold) {
            val_clips.push_back(clip);
        } else if (std::find(opt.exclude.begin(), opt.exclude.end(), clip.fold) ==
                   opt.exclude.end()) {
            train_clips.push_back(clip);
        }
    }
    if (val_clips.empty()) {
        throw std::runtime_error("no clips in validation fold " + std::to_string(opt.val_fold));
    }
    if (train_clips.empty()) throw std::runtime_error("no training clips left");

    std::cout << "seed " << config.seed << '\n';
    log_info("training on " + std::to_string(train_clips.size()) + " clips, validating on " +
             std::to_string(val_clips.size()) + " (fold " + std::to_string(opt.val_fold) + ")");

    const TrainResult result =
        train_model(model, config, train_clips, val_clips, [](const EpochRow& row) {
            log_debug("epoch " + std::to_string(row.epoch) + " train_loss " +
                      fmt(row.train_loss, 6) + " val_loss " + fmt(row.val_loss, 6) + " val_acc " +
                      fmt(row.val_acc));
        });

    fs::create_directories(opt.out);
    const std::string ckpt_path = (fs::path(opt.out) / "checkpoint.mclw").string();
    save_model(ckpt_path, model, result.params, result.zscore);
    write_history_csv((fs::path(opt.out) / "history.csv").string(), result.history);

    // Validation numbers are recomputed from the checkpoint as written, so a
    // later eval of the same file reproduces them exactly.
    const SavedModel saved = load_model(ckpt_path);
    const std::size_t q = shape_plan(model).segment;
    const std::size_t stride = effective_stride(config, q);
    const ClipEvaluation val = evaluate_clips(saved.params, val_clips, saved.zscore, q, stride);

    nlohmann::json summary;
    summary["val_fold"] = opt.val_fold;
    summary["excluded_folds"] = opt.exclude;
    summary["seed"] = config.seed;
    summary["epochs_run"] = result.history.rows.size();
    summary["best_epoch"] = result.history.best_epoch;
    summary["stopped_early"] = result.history.stopped_early;
    summary["segment"] = q;
    summary["stride"] = stride;
    summary["val_loss"] = val.mean_segment_loss;
    summary["val_acc"] = val.accuracy;
    write_text((fs::path(opt.out) / "summary.json").string(), summary.dump(2) + "\n");

    std::cout << "best epoch " << result.history.best_epoch << ", val accuracy "
              << fmt(val.accuracy) << '\n';
    return 0;
}

// ------------------------------------------------------------------------ cv

struct CvOpts {
    std::string model_config;
    std::string train_config;
    std::string data;
    std::string out;
    int folds = 10;
    std::uint64_t seed = 0;
    int jobs = 1;
    std::string vote = "probability";
};

int run_cv(const CvOpts& opt, bool seed_overridden) {
    const ModelConfig model = load_model_config_with_warnings(opt.model_config);
    TrainConfig config =
        opt.train_config.empty() ? TrainConfig{} : load_train_config(opt.train_config);
    if (seed_overridden) config.seed = opt.seed;

    const std::vector<FeatureClip> clips = load_clips(opt.data);
    if (clips.empty()) throw std::runtime_error("no clips in " + opt.data);

    std::vector<int> fold_of(clips.size(), -1);
    std::vector<std::size_t> per_fold(static_cast<std::size_t>(opt.folds), 0);
    bool index_folds_valid = true;
    for (std::size_t i = 0; i < clips.size(); ++i) {
        fold_of[i] = clips[i].fold;
        if (clips[i].fold < 0 || clips[i].fold >= opt.folds) {
            index_folds_valid = false;
            break;
        }
        ++per_fold[static_cast<std::size_t>(clips[i].fold)];
    }
    if (index_folds_valid) {
        for (std::size_t f = 0; f < per_fold.size(); ++f) {
            if (per_fold[f] == 0) index_folds_valid = false;
        }
    }
    if (index_folds_valid) {
        log_info("using the fold assignment from the index");
    } else {
        const FoldAssignment assignment = make_folds(clips, opt.folds, config.seed);
        for (const std::string& w : assignment.warnings) std::cerr << "warning: " << w << '\n';
        fold_of = assignment.fold;
        log_info("index folds unusable for " + std::to_string(opt.folds) +
                 " folds; assigned stratified folds (seed " + std::to_string(config.seed) + ")");
    }

    std::cout << "seed " << config.seed << '\n';
    const CvReport report = cross_validate(
        model, config, clips, fold_of, opt.folds, opt.jobs, parse_vote(opt.vote),
        [](const FoldOutcome& fold) {
            log_info("fold " + std::to_string(fold.test_fold) + " accuracy " +
                     fmt(fold.accuracy) + " (" + std::to_string(fold.history.rows.size()) +
                     " epochs, best " + std::to_string(fold.history.best_epoch) + ")");
        });

    fs::create_directories(opt.out);
    write_text((fs::path(opt.out) / "report.json").string(), cv_report_to_json(report));
    write_text((fs::path(opt.out) / "confusion.csv").string(), confusion_to_csv(report.pooled));
    write_text((fs::path(opt.out) / "confusion.txt").string(), confusion_to_text(report.pooled));
    for (const FoldOutcome& fold : report.folds) {
        write_history_csv(
            (fs::path(opt.out) / ("history_fold" + std::to_string(fold.test_fold) + ".csv"))
                .string(),
            fold.history);
    }

    for (const std::string& w : report.warnings) std::cerr << "warning: " << w << '\n';
    std::cout << "mean accuracy " << fmt(report.mean_accuracy) << '\n';
    return 0;
}

// ---------------------------------------------------------------------- eval

struct EvalOpts {
    std::string ckpt;
    std::string data;
    std::string out;
    int fold = -1;
    std::size_t stride = 0;
    std::string vote = "probability";
};

int run_eval(const EvalOpts& opt) {
    const SavedModel saved = load_model(opt.ckpt);
    std::vector<FeatureClip> clips = load_clips(opt.data);
    if (opt.fold >= 0) {
        std::vector<FeatureClip> kept;
        for (FeatureClip& clip : clips) {
            if (clip.fold == opt.fold) kept.push_back(std::move(clip));
        }
        clips = std::move(kept);
        if (clips.empty()) {
            throw std::runtime_error("no clips in fold " + std::to_string(opt.fold));
        }
    }
    if (clips.empty()) throw std::runtime_error("no clips in " + opt.data);

    const std::size_t q = shape_plan(saved.config).segment;
    const std::size_t stride = opt.stride > 0 ? opt.stride : (q + 1) / 2;
    const ClipEvaluation ev =
        evaluate_clips(saved.params, clips, saved.zscore, q, stride, parse_vote(opt.vote));

    std::cout << "clips " << clips.size() << ", accuracy " << fmt(ev.accuracy) << '\n';
    log_info("\n" + confusion_to_text(ev.confusion));

    if (!opt.out.empty()) {
        fs::create_directories(opt.out);
        nlohmann::json result;
        result["clips"] = clips.size();
        result["segments"] = ev.segment_count;
        result["fold"] = opt.fold;
        result["stride"] = stride;
        result["vote"] = opt.vote;
        result["accuracy"] = ev.accuracy;
        result["mean_segment_loss"] = ev.mean_segment_loss;
        write_text((fs::path(opt.out) / "eval.json").string(), result.dump(2) + "\n");
        write_text((fs::path(opt.out) / "confusion.csv").string(),
                   confusion_to_csv(ev.confusion));
        write_text((fs::path(opt.out) / "confusion.txt").string(),
                   confusion_to_text(ev.confusion));
    }
    return 0;
}

// --------------------------------------------------------------------- synth

struct SynthOpts {
    std::string out;
    int clips = 30;
    int classes = 3;
    int frames = 60;
    int features = 40;
    int folds = 3;
    std::uint64_t seed = 42;
};

int run_synth(const SynthOpts& opt) {
    if (opt.classes < 2) throw std::invalid_argument("synth: need at least 2 classes");
    if (opt.clips < opt.classes) {
        throw std::invalid_argument("synth: need at least one clip per class");
    }
    if (opt.frames < 1) throw std::invalid_argument("synth: frames must be positive");
    if (opt.features < 9 * opt.classes) {
        throw std::invalid_argument("synth: need at least " + std::to_string(9 * opt.classes) +
                                    " features so the class bands cannot overlap");
    }

    fs::create_directories(opt.out);
    std::vector<IndexEntry> entries;
    std::vector<int> labels;
    for (int i = 0; i < opt.clips; ++i) {
        const int label = i % opt.classes;
        Rng rng(derive_seed(opt.seed, static_cast<std::uint64_t>(i)));

        // each class owns one 5-bin band; the clip shifts it by up to 2 bins
        const int center = static_cast<int>((label + 0.5) * opt.features / opt.classes);
        const int shift = static_cast<int>(rng.next_below(5)) - 2;

        Matrix frames(static_cast<std::size_t>(opt.frames), static_cast<std::size_t>(opt.features));
        for (double& v : frames.values()) v = rng.uniform(-0.3, 0.3);
        for (std::size_t r = 0; r < frames.rows(); ++r) {
            for (int c = center + shift - 2; c <= center + shift + 2; ++c) {
                if (c < 0 || c >= opt.features) continue;
                frames(r, static_cast<std::size_t>(c)) += 2.0 + rng.uniform(0.0, 1.0);
            }
        }

        std::ostringstream id;
        id << "clip_" << std::setw(3) << std::setfill('0') << i;
        write_feature_clip((fs::path(opt.out) / (id.str() + ".mcln")).string(), frames,
                           static_cast<std::uint16_t>(label));
        entries.push_back(IndexEntry{id.str(), id.str() + ".mcln", label, -1});
        labels.push_back(label);
    }

    const FoldAssignment assignment = make_folds(labels, opt.folds, opt.seed);
    for (const std::string& w : assignment.warnings) std::cerr << "warning: " << w << '\n';
    for (std::size_t i = 0; i < entries.size(); ++i) entries[i].fold = assignment.fold[i];
    write_index((fs::path(opt.out) / "index.csv").string(), entries);

    log_info("wrote " + std::to_string(opt.clips) + " synthetic clips (" +
             std::to_string(opt.classes) + " classes, " + std::to_string(opt.folds) +
             " folds, seed " + std::to_string(opt.seed) + ") to " + opt.out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    std::string log_error;
    if (!init_log_level(log_error)) {
        std::cerr << "error: " << log_error << '\n';
        return 1;
    }

    CLI::App app{"Masked windowed conditional neural networks for audio classification"};
    app.require_subcommand(1);
    int rc = 0;

    PreprocessOpts pre;
    CLI::App* pre_cmd =
        app.add_subcommand("preprocess", "Compute log-mel features for every clip in an index");
    pre_cmd->add_option("--audio-dir", pre.audio_dir, "Directory WAV paths are resolved against")
        ->required()
        ->check(CLI::ExistingDirectory);
    pre_cmd->add_option("--index", pre.index, "Input CSV: id,path,label,fold")
        ->required()
        ->check(CLI::ExistingFile);
    pre_cmd->add_option("--out", pre.out, "Output directory for feature clips and index.csv")
        ->required();
    pre_cmd->add_option("--n-fft", pre.n_fft, "FFT length (power of two)")
        ->capture_default_str();
    pre_cmd->add_option("--hop", pre.hop, "Hop between frames in samples")->capture_default_str();
    pre_cmd->add_option("--mels", pre.mels, "Mel bands per frame")->capture_default_str();
    pre_cmd->add_option("--folds", pre.folds, "Assign this many stratified folds (0 keeps input)")
        ->capture_default_str();
    pre_cmd->add_option("--seed", pre.seed, "Seed for the fold assignment")
        ->capture_default_str();
    pre_cmd->add_option("--jobs", pre.jobs, "Clips processed in parallel")->capture_default_str();
    pre_cmd->callback([&]() { rc = run_preprocess(pre); });

    MaskOpts mask;
    CLI::App* mask_cmd = app.add_subcommand("mask", "Build a banded weight mask and dump it");
    mask_cmd->add_option("--l", mask.l, "Feature dimension (mask rows)")->capture_default_str();
    mask_cmd->add_option("--e", mask.e, "Hidden width (mask columns)")->capture_default_str();
    mask_cmd->add_option("--bw", mask.bw, "Bandwidth: ones per band")->capture_default_str();
    mask_cmd->add_option("--ov", mask.ov, "Overlap between successive bands (may be negative)")
        ->capture_default_str();
    mask_cmd->add_option("--out", mask.out, "Write an ASCII PGM image here");
    mask_cmd->add_option("--csv", mask.csv, "Write 0/1 CSV here");
    mask_cmd->callback([&]() { rc = run_mask(mask); });

    TrainOpts train;
    CLI::App* train_cmd = app.add_subcommand("train", "Train one model on indexed feature clips");
    train_cmd->add_option("--config", train.model_config, "Model architecture JSON")
        ->required()
        ->check(CLI::ExistingFile);
    train_cmd
        ->add_option("--train-config", train.train_config,
                     "Optimization JSON (defaults apply when omitted)")
        ->check(CLI::ExistingFile);
    train_cmd->add_option("--data", train.data, "Feature index CSV")
        ->required()
        ->check(CLI::ExistingFile);
    train_cmd->add_option("--out", train.out, "Output directory")->required();
    train_cmd->add_option("--val-fold", train.val_fold, "Fold held out for validation")
        ->capture_default_str();
    train_cmd->add_option("--exclude-fold", train.exclude,
                          "Folds dropped entirely (repeatable, e.g. a test fold)");
    CLI::Option* train_seed =
        train_cmd->add_option("--seed", train.seed, "Overrides the train-config seed");
    train_cmd->callback([&]() { rc = run_train(train, train_seed->count() > 0); });

    CvOpts cv;
    CLI::App* cv_cmd = app.add_subcommand("cv", "Rotating k-fold cross-validation");
    cv_cmd->add_option("--config", cv.model_config, "Model architecture JSON")
        ->required()
        ->check(CLI::ExistingFile);
    cv_cmd
        ->add_option("--train-config", cv.train_config,
                     "Optimization JSON (defaults apply when omitted)")
        ->check(CLI::ExistingFile);
    cv_cmd->add_option("--data", cv.data, "Feature index CSV")
        ->required()
        ->check(CLI::ExistingFile);
    cv_cmd->add_option("--out", cv.out, "Output directory")->required();
    cv_cmd->add_option("--folds", cv.folds, "Number of folds")->capture_default_str();
    CLI::Option* cv_seed = cv_cmd->add_option("--seed", cv.seed, "Overrides the train-config seed");
    cv_cmd->add_option("--jobs", cv.jobs, "Folds trained in parallel")->capture_default_str();
    cv_cmd->add_option("--vote", cv.vote, "Clip voting scheme")
        ->check(CLI::IsMember({"probability", "product"}))
        ->capture_default_str();
    cv_cmd->callback([&]() { rc = run_cv(cv, cv_seed->count() > 0); });

    EvalOpts eval;
    CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on indexed clips");
    eval_cmd->add_option("--ckpt", eval.ckpt, "Checkpoint file")
        ->required()
        ->check(CLI::ExistingFile);
    eval_cmd->add_option("--data", eval.data, "Feature index CSV")
        ->required()
        ->check(CLI::ExistingFile);
    eval_cmd->add_option("--fold", eval.fold, "Evaluate only this fold (-1: all clips)")
        ->capture_default_str();
    eval_cmd->add_option("--stride", eval.stride,
                         "Segment stride (0: half a segment, the training default)")
        ->capture_default_str();
    eval_cmd->add_option("--vote", eval.vote, "Clip voting scheme")
        ->check(CLI::IsMember({"probability", "product"}))
        ->capture_default_str();
    eval_cmd->add_option("--out", eval.out, "Also write eval.json and confusion tables here");
    eval_cmd->callback([&]() { rc = run_eval(eval); });

    SynthOpts synth;
    CLI::App* synth_cmd = app.add_subcommand(
        "synth", "Generate a small synthetic feature dataset with one noise band per class");
    synth_cmd->add_option("--out", synth.out, "Output directory")->required();
    synth_cmd->add_option("--clips", synth.clips, "Total clips")->capture_default_str();
    synth_cmd->add_option("--classes", synth.classes, "Class count")->capture_default_str();
    synth_cmd->add_option("--frames", synth.frames, "Frames per clip")->capture_default_str();
    synth_cmd->add_option("--features", synth.features, "Features per frame")
        ->capture_default_str();
    synth_cmd->add_option("--folds", synth.folds, "Stratified folds to assign")
        ->capture_default_str();
    synth_cmd->add_option("--seed", synth.seed, "Generation seed")->capture_default_str();
    synth_cmd->callback([&]() { rc = run_synth(synth); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : 1;
    } catch (const ConfigError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 1;
    } catch (const std::invalid_argument& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 1;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 2;
    }
    return rc;
}
