// Acceptance checks for the whole repository. Each criterion prints one
// PASS/FAIL line; the binary exits nonzero when any of them fails.
//
// usage: mclnn_acceptance <cli-binary> <configs-dir> <reproducing-md>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mclnn/dsp.hpp"
#include "mclnn/layers.hpp"
#include "mclnn/mask.hpp"
#include "mclnn/model.hpp"
#include "mclnn/training.hpp"
#include "mclnn/wav.hpp"

#include "support/oracles.hpp"
#include "support/proc.hpp"
#include "support/tmpdir.hpp"

using namespace mclnn;
using testutil::TempDir;

namespace {

struct Paths {
    std::string cli;
    std::string configs;
    std::string reproducing;
};

std::string describe(const MaskSpec& spec) {
    std::ostringstream out;
    out << "l=" << spec.features << " e=" << spec.width << " bw=" << spec.bandwidth
        << " ov=" << spec.overlap;
    return out.str();
}

double value_after(const std::string& output, const std::string& key) {
    const auto pos = output.find(key);
    if (pos == std::string::npos) {
        throw std::runtime_error("missing \"" + key + "\" in output:\n" + output);
    }
    return std::stod(output.substr(pos + key.size()));
}

void write_tone(const std::string& path, std::size_t samples, double hz, std::uint32_t rate) {
    std::vector<double> wave(samples);
    for (std::size_t i = 0; i < samples; ++i) {
        wave[i] = 0.25 * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / rate);
    }
    write_wav(path, wave, rate);
}

// ------------------------------------------------------------- 1. mask oracle

std::string mask_oracle_sweep() {
    for (std::int64_t l = 1; l <= 12; ++l) {
        for (std::int64_t e = 1; e <= 12; ++e) {
            for (std::int64_t bw = 1; bw <= l; ++bw) {
                for (std::int64_t ov = -bw; ov <= bw; ++ov) {
                    const MaskSpec spec{l, e, bw, ov};
                    const Mask mask = build_mask(spec);
                    const std::vector<int> want = oracle::banded_mask(l, e, bw, ov);
                    for (std::int64_t col = 0; col < e; ++col) {
                        for (std::int64_t row = 0; row < l; ++row) {
                            const double got = mask.pattern(static_cast<std::size_t>(row),
                                                            static_cast<std::size_t>(col));
                            if (got != static_cast<double>(oracle::mask_cell(want, l, row, col))) {
                                return "cell (" + std::to_string(row) + "," +
                                       std::to_string(col) + ") differs for " + describe(spec);
                            }
                        }
                    }
                }
            }
        }
    }
    return {};
}

// -------------------------------------------------------- 2. gradient fidelity

// Central-difference sweep over a set of live coordinates. `analytic[i]` is
// checked against the difference quotient of `loss` in coordinate *coords[i].
std::string fd_mismatch(const std::vector<double*>& coords, const std::vector<double>& analytic,
                        const std::function<double()>& loss, double tol,
                        const std::string& what) {
    const double h = 1e-6;
    for (std::size_t i = 0; i < coords.size(); ++i) {
        double& x = *coords[i];
        const double saved = x;
        x = saved + h;
        const double up = loss();
        x = saved - h;
        const double down = loss();
        x = saved;
        const double fd = (up - down) / (2.0 * h);
        const double err = oracle::rel_err(analytic[i], fd);
        if (err > tol) {
            std::ostringstream out;
            out << what << ": coordinate " << i << " analytic " << analytic[i] << " vs fd "
                << fd << " (rel err " << err << ")";
            return out.str();
        }
    }
    return {};
}

void append_matrix(Matrix& m, const Matrix& grads, std::vector<double*>& coords,
                   std::vector<double>& analytic) {
    for (std::size_t i = 0; i < m.values().size(); ++i) {
        coords.push_back(&m.values()[i]);
        analytic.push_back(grads.values()[i]);
    }
}

TransferKind pick_transfer(Rng& rng) {
    return rng.next_below(2) == 0 ? TransferKind::sigmoid : TransferKind::tanh;
}

std::string check_clnn_gradients(Rng& rng, bool masked) {
    const std::size_t features = 3 + rng.next_below(3);
    const std::size_t width = 2 + rng.next_below(4);
    const int order = static_cast<int>(rng.next_below(3));
    std::optional<Mask> mask;
    if (masked) {
        const std::int64_t bw = 1 + static_cast<std::int64_t>(rng.next_below(features));
        const std::int64_t ov =
            -bw + static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(2 * bw + 1)));
        mask = build_mask(MaskSpec{static_cast<std::int64_t>(features),
                                   static_cast<std::int64_t>(width), bw, ov});
    }
    ClnnLayerParams layer =
        init_clnn_layer(features, width, order, pick_transfer(rng), mask, rng);

    const std::size_t frames = static_cast<std::size_t>(2 * order + 1) + rng.next_below(3);
    FrameBlock input(frames, features);
    for (double& v : input.values()) v = rng.uniform(-1.5, 1.5);
    Matrix upstream(frames - static_cast<std::size_t>(2 * order), width);
    for (double& v : upstream.values()) v = rng.uniform(-1.0, 1.0);

    const auto loss = [&]() {
        const FrameBlock out = clnn_forward(input, layer);
        double sum = 0.0;
        for (std::size_t i = 0; i < out.values().size(); ++i) {
            sum += out.values()[i] * upstream.values()[i];
        }
        return sum;
    };

    const FrameBlock out = clnn_forward(input, layer);
    const ClnnGradients grads = clnn_backward(input, layer, out, upstream);

    std::vector<double*> coords;
    std::vector<double> analytic;
    for (std::size_t u = 0; u < layer.weights.size(); ++u) {
        append_matrix(layer.weights[u], grads.weights[u], coords, analytic);
    }
    for (std::size_t j = 0; j < layer.bias.size(); ++j) {
        coords.push_back(&layer.bias[j]);
        analytic.push_back(grads.bias[j]);
    }
    append_matrix(input, grads.input, coords, analytic);
    return fd_mismatch(coords, analytic, loss, 1e-6,
                       masked ? "masked conditional layer" : "conditional layer");
}

std::string check_pool_gradients(Rng& rng, PoolKind kind) {
    const std::size_t rows = 2 + rng.next_below(4);
    const std::size_t cols = 2 + rng.next_below(4);
    FrameBlock input(rows, cols);
    for (int attempt = 0;; ++attempt) {
        for (double& v : input.values()) v = rng.uniform(-1.0, 1.0);
        if (kind == PoolKind::mean) break;
        // keep column values well separated so the argmax is stable under +-h
        bool separated = true;
        for (std::size_t c = 0; c < cols && separated; ++c) {
            for (std::size_t a = 0; a < rows && separated; ++a) {
                for (std::size_t b = a + 1; b < rows; ++b) {
                    if (std::abs(input(a, c) - input(b, c)) < 1e-4) {
                        separated = false;
                        break;
                    }
                }
            }
        }
        if (separated) break;
        if (attempt > 100) return "max pool: could not draw a separated input";
    }

    std::vector<double> upstream(cols);
    for (double& v : upstream) v = rng.uniform(-1.0, 1.0);

    const auto loss = [&]() {
        const std::vector<double> pooled = global_pool(input, kind);
        double sum = 0.0;
        for (std::size_t j = 0; j < pooled.size(); ++j) sum += pooled[j] * upstream[j];
        return sum;
    };

    const FrameBlock grads = global_pool_backward(input, kind, upstream);
    std::vector<double*> coords;
    std::vector<double> analytic;
    append_matrix(input, grads, coords, analytic);
    return fd_mismatch(coords, analytic, loss, 1e-6,
                       kind == PoolKind::mean ? "mean pooling" : "max pooling");
}

std::string check_dense_gradients(Rng& rng) {
    const std::size_t in = 3 + rng.next_below(4);
    const std::size_t out_size = 2 + rng.next_below(4);
    DenseParams layer = init_dense_layer(in, out_size, pick_transfer(rng), rng);
    std::vector<double> x(in);
    for (double& v : x) v = rng.uniform(-1.5, 1.5);
    std::vector<double> upstream(out_size);
    for (double& v : upstream) v = rng.uniform(-1.0, 1.0);

    const auto loss = [&]() {
        const std::vector<double> y = dense_forward(x, layer);
        double sum = 0.0;
        for (std::size_t j = 0; j < y.size(); ++j) sum += y[j] * upstream[j];
        return sum;
    };

    const std::vector<double> y = dense_forward(x, layer);
    const DenseGradients grads = dense_backward(x, layer, y, upstream);

    std::vector<double*> coords;
    std::vector<double> analytic;
    append_matrix(layer.weights, grads.weights, coords, analytic);
    for (std::size_t j = 0; j < layer.bias.size(); ++j) {
        coords.push_back(&layer.bias[j]);
        analytic.push_back(grads.bias[j]);
    }
    for (std::size_t j = 0; j < x.size(); ++j) {
        coords.push_back(&x[j]);
        analytic.push_back(grads.input[j]);
    }
    return fd_mismatch(coords, analytic, loss, 1e-6, "dense layer");
}

std::string check_softmax_ce_gradients(Rng& rng) {
    const std::size_t classes = 3 + rng.next_below(4);
    std::vector<double> scores(classes);
    for (double& v : scores) v = rng.uniform(-2.0, 2.0);
    const std::size_t target = rng.next_below(classes);

    const auto loss = [&]() { return cross_entropy(softmax(scores), target).loss; };

    const CrossEntropy ce = cross_entropy(softmax(scores), target);
    std::vector<double*> coords;
    std::vector<double> analytic;
    for (std::size_t j = 0; j < classes; ++j) {
        coords.push_back(&scores[j]);
        analytic.push_back(ce.grad[j]);
    }
    return fd_mismatch(coords, analytic, loss, 1e-6, "softmax cross-entropy");
}

std::string check_end_to_end_gradients(Rng& rng) {
    ModelConfig config;
    config.input_features = 4 + rng.next_below(2);
    config.class_count = 3;
    ClnnLayerConfig layer;
    layer.order = 1;
    layer.width = 4;
    layer.mask = MaskSettings{2, 1};
    layer.transfer = TransferKind::sigmoid;
    config.clnn_layers = {layer};
    config.pooling = PoolingConfig{PoolKind::mean, 2};
    config.dense_head = {DenseLayerConfig{4, TransferKind::tanh}};

    ModelParams params = build_model(config, rng);
    const std::size_t q = segment_size(config);
    FrameBlock segment(q, config.input_features);
    for (double& v : segment.values()) v = rng.uniform(-1.0, 1.0);
    const std::size_t target = rng.next_below(config.class_count);

    const auto loss = [&]() { return cross_entropy(predict(params, segment), target).loss; };

    // Analytic gradient composed from the layer primitives; predict() must be
    // exactly this chain, so the difference quotient of its loss has to agree.
    const FrameBlock hidden_frames = clnn_forward(segment, params.clnn[0]);
    const std::vector<double> pooled = global_pool(hidden_frames, params.pooling);
    const std::vector<double> hidden = dense_forward(pooled, params.head[0]);
    const std::vector<double> scores = dense_forward(hidden, params.head[1]);
    const CrossEntropy ce = cross_entropy(softmax(scores), target);
    const DenseGradients g_classifier = dense_backward(hidden, params.head[1], scores, ce.grad);
    const DenseGradients g_hidden = dense_backward(pooled, params.head[0], hidden,
                                                   g_classifier.input);
    const FrameBlock g_pool = global_pool_backward(hidden_frames, params.pooling,
                                                   g_hidden.input);
    const ClnnGradients g_clnn = clnn_backward(segment, params.clnn[0], hidden_frames, g_pool);

    std::vector<double*> coords;
    std::vector<double> analytic;
    for (std::size_t u = 0; u < params.clnn[0].weights.size(); ++u) {
        append_matrix(params.clnn[0].weights[u], g_clnn.weights[u], coords, analytic);
    }
    for (std::size_t j = 0; j < params.clnn[0].bias.size(); ++j) {
        coords.push_back(&params.clnn[0].bias[j]);
        analytic.push_back(g_clnn.bias[j]);
    }
    const DenseGradients* dense_grads[] = {&g_hidden, &g_classifier};
    for (std::size_t d = 0; d < params.head.size(); ++d) {
        append_matrix(params.head[d].weights, dense_grads[d]->weights, coords, analytic);
        for (std::size_t j = 0; j < params.head[d].bias.size(); ++j) {
            coords.push_back(&params.head[d].bias[j]);
            analytic.push_back(dense_grads[d]->bias[j]);
        }
    }
    return fd_mismatch(coords, analytic, loss, 1e-5, "end-to-end model");
}

std::string gradient_fidelity() {
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        Rng rng(seed);
        for (const auto& check : {
                 check_clnn_gradients(rng, false),
                 check_clnn_gradients(rng, true),
                 check_pool_gradients(rng, PoolKind::mean),
                 check_pool_gradients(rng, PoolKind::max),
                 check_dense_gradients(rng),
                 check_softmax_ce_gradients(rng),
                 check_end_to_end_gradients(rng),
             }) {
            if (!check.empty()) return "seed " + std::to_string(seed) + ": " + check;
        }
    }
    return {};
}

// -------------------------------------------------- 3. masked-gradient zeros

std::string masked_gradient_sparsity() {
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        Rng rng(seed);
        const std::size_t features = 3 + rng.next_below(6);
        const std::size_t width = 2 + rng.next_below(7);
        const int order = static_cast<int>(rng.next_below(4));
        const std::int64_t bw = 1 + static_cast<std::int64_t>(rng.next_below(features));
        const std::int64_t ov =
            -bw + static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(2 * bw + 1)));
        const Mask mask = build_mask(MaskSpec{static_cast<std::int64_t>(features),
                                              static_cast<std::int64_t>(width), bw, ov});
        const ClnnLayerParams layer =
            init_clnn_layer(features, width, order, pick_transfer(rng), mask, rng);

        const std::size_t frames = static_cast<std::size_t>(2 * order + 1) + rng.next_below(4);
        FrameBlock input(frames, features);
        for (double& v : input.values()) v = rng.uniform(-2.0, 2.0);
        Matrix upstream(frames - static_cast<std::size_t>(2 * order), width);
        for (double& v : upstream.values()) v = rng.uniform(-1.0, 1.0);

        const FrameBlock out = clnn_forward(input, layer);
        const ClnnGradients grads = clnn_backward(input, layer, out, upstream);
        for (std::size_t u = 0; u < grads.weights.size(); ++u) {
            for (std::size_t r = 0; r < features; ++r) {
                for (std::size_t c = 0; c < width; ++c) {
                    if (mask.pattern(r, c) == 0.0 && grads.weights[u](r, c) != 0.0) {
                        return "seed " + std::to_string(seed) + ": grad of window slot " +
                               std::to_string(u) + " cell (" + std::to_string(r) + "," +
                               std::to_string(c) + ") is " +
                               std::to_string(grads.weights[u](r, c)) + " off-band";
                    }
                }
            }
        }
    }
    return {};
}

// -------------------------------------------------------- 4. degenerate forms

std::string equivalence_degeneracies() {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        // all-ones mask: the masked layer must be bitwise the plain one
        const std::size_t features = 5;
        const std::size_t width = 4;
        const int order = 2;
        const Mask ones = build_mask(MaskSpec{5, 4, 5, 5});
        Rng rng_masked(seed);
        Rng rng_plain(seed);
        const ClnnLayerParams masked =
            init_clnn_layer(features, width, order, TransferKind::sigmoid, ones, rng_masked);
        const ClnnLayerParams plain = init_clnn_layer(features, width, order,
                                                      TransferKind::sigmoid, std::nullopt,
                                                      rng_plain);

        Rng data(seed + 1000);
        FrameBlock input(7, features);
        for (double& v : input.values()) v = data.uniform(-1.0, 1.0);
        Matrix upstream(7 - 2 * order, width);
        for (double& v : upstream.values()) v = data.uniform(-1.0, 1.0);

        const FrameBlock out_masked = clnn_forward(input, masked);
        const FrameBlock out_plain = clnn_forward(input, plain);
        if (out_masked.values() != out_plain.values()) {
            return "seed " + std::to_string(seed) + ": all-ones mask changed the forward pass";
        }
        const ClnnGradients g_masked = clnn_backward(input, masked, out_masked, upstream);
        const ClnnGradients g_plain = clnn_backward(input, plain, out_plain, upstream);
        for (std::size_t u = 0; u < g_masked.weights.size(); ++u) {
            if (g_masked.weights[u].values() != g_plain.weights[u].values()) {
                return "seed " + std::to_string(seed) +
                       ": all-ones mask changed a weight gradient";
            }
        }
        if (g_masked.bias != g_plain.bias || g_masked.input.values() != g_plain.input.values()) {
            return "seed " + std::to_string(seed) + ": all-ones mask changed a gradient";
        }

        // order 0: the layer must act as the same dense map on every frame
        Rng rng_zero(seed + 2000);
        const ClnnLayerParams order0 =
            init_clnn_layer(features, width, 0, TransferKind::tanh, std::nullopt, rng_zero);
        DenseParams dense;
        dense.weights = order0.weights[0];
        dense.bias = order0.bias;
        dense.transfer = order0.transfer;

        FrameBlock block(3, features);
        for (double& v : block.values()) v = data.uniform(-1.0, 1.0);
        const FrameBlock through_layer = clnn_forward(block, order0);
        for (std::size_t r = 0; r < block.rows(); ++r) {
            std::vector<double> frame(features);
            for (std::size_t c = 0; c < features; ++c) frame[c] = block(r, c);
            const std::vector<double> through_dense = dense_forward(frame, dense);
            for (std::size_t c = 0; c < width; ++c) {
                if (std::abs(through_layer(r, c) - through_dense[c]) > 1e-12) {
                    return "seed " + std::to_string(seed) +
                           ": order-0 layer differs from the dense map at frame " +
                           std::to_string(r);
                }
            }
        }
    }
    return {};
}

// -------------------------------------------------------- 5. shape arithmetic

std::string shape_arithmetic() {
    // three order-4 layers and five extra frames: 2*4*3 + 5 = 29, each layer
    // trimming 8 frames on the way down to the pooled 5
    ModelConfig worked;
    worked.input_features = 20;
    worked.class_count = 4;
    for (int i = 0; i < 3; ++i) {
        ClnnLayerConfig layer;
        layer.order = 4;
        layer.width = 10;
        worked.clnn_layers.push_back(layer);
    }
    worked.pooling = PoolingConfig{PoolKind::mean, 5};

    const ShapePlan plan = shape_plan(worked);
    if (plan.segment != 29) {
        return "expected the worked example to need 29 frames, got " +
               std::to_string(plan.segment);
    }
    const std::vector<std::size_t> want{21, 13, 5};
    if (plan.frames_after != want) {
        return "per-layer frame counts for the worked example are wrong";
    }

    Rng rng(7);
    for (int i = 0; i < 1000; ++i) {
        ModelConfig config;
        config.input_features = 1 + rng.next_below(16);
        config.class_count = 2 + rng.next_below(9);
        const std::size_t layer_count = 1 + rng.next_below(4);
        std::size_t order_sum = 0;
        for (std::size_t j = 0; j < layer_count; ++j) {
            ClnnLayerConfig layer;
            layer.order = static_cast<int>(rng.next_below(7));
            layer.width = 1 + rng.next_below(12);
            config.clnn_layers.push_back(layer);
            order_sum += static_cast<std::size_t>(layer.order);
        }
        config.pooling.extra_frames = 1 + rng.next_below(8);

        const std::size_t q = segment_size(config);
        if (q != 2 * order_sum + config.pooling.extra_frames) {
            return "segment_size disagrees with 2*sum(order)+k for config " + std::to_string(i);
        }
        const ShapePlan sweep = shape_plan(config);
        if (sweep.segment != q) return "shape_plan.segment disagrees with segment_size";
        std::size_t remaining = q;
        for (std::size_t j = 0; j < layer_count; ++j) {
            remaining -= 2 * static_cast<std::size_t>(config.clnn_layers[j].order);
            if (sweep.frames_after[j] != remaining) {
                return "frames_after[" + std::to_string(j) + "] is inconsistent for config " +
                       std::to_string(i);
            }
        }
        if (remaining != config.pooling.extra_frames) {
            return "the surviving frame count is not k for config " + std::to_string(i);
        }
        if (sweep.head_input_width != config.clnn_layers.back().width) {
            return "head_input_width is not the last layer width for config " +
                   std::to_string(i);
        }
    }
    return {};
}

// ------------------------------------------------------------ 6. dsp fidelity

std::string dsp_fidelity() {
    struct Case {
        std::size_t n_fft;
        std::size_t hop;
        std::size_t samples;
    };
    const std::vector<Case> cases{{64, 32, 200}, {256, 100, 700}, {512, 512, 1061}};

    Rng rng(11);
    for (const Case& c : cases) {
        AudioBuffer audio;
        audio.sample_rate = 16000;
        audio.samples.resize(c.samples);
        for (double& v : audio.samples) v = rng.uniform(-1.0, 1.0);

        const Matrix got = stft_magnitude(audio, StftConfig{c.n_fft, c.hop});
        std::vector<double> window(c.n_fft);
        for (std::size_t i = 0; i < c.n_fft; ++i) {
            window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                             static_cast<double>(c.n_fft));
        }
        const std::size_t frames = (c.samples - c.n_fft) / c.hop + 1;
        if (got.rows() != frames || got.cols() != c.n_fft / 2 + 1) {
            return "spectrogram shape is wrong for n_fft " + std::to_string(c.n_fft);
        }
        for (std::size_t r = 0; r < frames; ++r) {
            std::vector<double> frame(c.n_fft);
            for (std::size_t i = 0; i < c.n_fft; ++i) {
                frame[i] = audio.samples[r * c.hop + i] * window[i];
            }
            const std::vector<std::complex<double>> bins = oracle::dft_real(frame);
            for (std::size_t k = 0; k <= c.n_fft / 2; ++k) {
                if (std::abs(got(r, k) - std::abs(bins[k])) > 1e-9) {
                    return "spectrogram bin (" + std::to_string(r) + "," + std::to_string(k) +
                           ") differs from the naive transform for n_fft " +
                           std::to_string(c.n_fft);
                }
            }
        }
    }

    const double mel = hz_to_mel(1000.0);
    if (std::abs(mel - 1000.0) > 0.5) {
        return "mel(1000 Hz) = " + std::to_string(mel) + ", expected 1000 +- 0.5";
    }
    return {};
}

// ------------------------------------------------------ 7. pipeline smoke run

std::string pipeline_smoke(const Paths& paths) {
    TempDir tmp;
    const proc::Result synth = proc::run(paths.cli + " synth --out " + tmp.str("data"));
    if (synth.status != 0) return "synth failed:\n" + synth.output;

    const proc::Result cv = proc::run(
        paths.cli + " cv --config " + paths.configs + "/smoke_model.json --train-config " +
        paths.configs + "/smoke_train.json --data " + tmp.str("data") +
        "/index.csv --folds 3 --jobs 1 --out " + tmp.str("cv"));
    if (cv.status != 0) return "cv failed:\n" + cv.output;

    const double accuracy = value_after(cv.output, "mean accuracy ");
    if (accuracy < 0.9) {
        return "mean accuracy " + std::to_string(accuracy) + " is below 0.9:\n" + cv.output;
    }
    return {};
}

// ------------------------------------------------- 8. reference architectures

std::string expect_layer(const ClnnLayerConfig& layer, int order, std::size_t width,
                         std::int64_t bandwidth, std::int64_t overlap, const char* name) {
    if (layer.order != order) return std::string(name) + ": wrong order";
    if (layer.width != width) return std::string(name) + ": wrong width";
    if (!layer.mask) return std::string(name) + ": mask missing";
    if (layer.mask->bandwidth != bandwidth) return std::string(name) + ": wrong bandwidth";
    if (layer.mask->overlap != overlap) return std::string(name) + ": wrong overlap";
    return {};
}

std::string reference_configs(const Paths& paths) {
    struct Expected {
        const char* file;
        std::size_t classes;
        int order;
        std::size_t extra_frames;
    };
    const std::vector<Expected> table{{"ballroom.json", 8, 15, 11}, {"homburg.json", 9, 5, 2}};

    for (const Expected& want : table) {
        const ModelConfig config = load_model_config(paths.configs + "/" + want.file);
        const std::string name = want.file;
        if (config.input_features != 256) return name + ": input_features is not 256";
        if (config.class_count != want.classes) return name + ": wrong class count";
        if (config.clnn_layers.size() != 2) return name + ": expected 2 conditional layers";
        std::string err = expect_layer(config.clnn_layers[0], want.order, 220, 40, -10,
                                       (name + " layer 0").c_str());
        if (!err.empty()) return err;
        err = expect_layer(config.clnn_layers[1], want.order, 200, 10, 3,
                           (name + " layer 1").c_str());
        if (!err.empty()) return err;
        if (config.pooling.statistic != PoolKind::mean) return name + ": pooling is not mean";
        if (config.pooling.extra_frames != want.extra_frames) {
            return name + ": wrong extra_frames";
        }
        if (config.dense_head.size() != 2 || config.dense_head[0].width != 50 ||
            config.dense_head[1].width != 10) {
            return name + ": dense head is not 50 then 10";
        }
        if (!config.validate().empty()) return name + ": validation produced warnings";
    }

    const std::string doc = testutil::read_file(paths.reproducing);
    if (doc.find("Ballroom") == std::string::npos || doc.find("Homburg") == std::string::npos) {
        return "REPRODUCING.md does not cover both datasets";
    }
    return {};
}

// ----------------------------------------------------------- 9. determinism

std::string same_bytes(const std::string& a, const std::string& b, const std::string& what) {
    if (testutil::read_file(a) != testutil::read_file(b)) {
        return what + " differs between identical runs";
    }
    return {};
}

std::string rerun_determinism(const Paths& paths) {
    TempDir tmp;

    const std::string audio = tmp.str("audio");
    std::filesystem::create_directories(audio);
    write_tone(audio + "/a.wav", 20000, 440.0, 16000);
    write_tone(audio + "/b.wav", 16000, 900.0, 16000);
    testutil::write_file(audio + "/index.csv",
                         "id,path,label,fold\na,a.wav,0,-1\nb,b.wav,1,-1\n");
    for (const char* out : {"feat1", "feat2"}) {
        const proc::Result r = proc::run(paths.cli + " preprocess --audio-dir " + audio +
                                         " --index " + audio + "/index.csv --mels 32 --out " +
                                         tmp.str(out));
        if (r.status != 0) return "preprocess failed:\n" + r.output;
    }
    for (const char* file : {"a.mcln", "b.mcln", "index.csv"}) {
        const std::string err = same_bytes(tmp.str("feat1") + "/" + file,
                                           tmp.str("feat2") + "/" + file,
                                           std::string("preprocess output ") + file);
        if (!err.empty()) return err;
    }

    for (int i = 1; i <= 2; ++i) {
        const std::string tag = std::to_string(i);
        const proc::Result r =
            proc::run(paths.cli + " mask --l 64 --e 50 --bw 7 --ov -2 --out " +
                      tmp.str("m" + tag + ".pgm") + " --csv " + tmp.str("m" + tag + ".csv"));
        if (r.status != 0) return "mask dump failed:\n" + r.output;
    }
    for (const char* ext : {".pgm", ".csv"}) {
        const std::string err = same_bytes(tmp.str("m1") + ext, tmp.str("m2") + ext,
                                           std::string("mask dump ") + ext);
        if (!err.empty()) return err;
    }

    const proc::Result synth =
        proc::run(paths.cli + " synth --clips 9 --folds 3 --out " + tmp.str("data"));
    if (synth.status != 0) return "synth failed:\n" + synth.output;
    testutil::write_file(tmp.str("train.json"),
                         R"({"epochs": 2, "batch_size": 8, "seed": 3, "patience": 0})");
    for (const char* out : {"run1", "run2"}) {
        const proc::Result r = proc::run(
            paths.cli + " train --config " + paths.configs + "/smoke_model.json" +
            " --train-config " + tmp.str("train.json") + " --data " + tmp.str("data") +
            "/index.csv --val-fold 0 --out " + tmp.str(out));
        if (r.status != 0) return "train failed:\n" + r.output;
    }
    for (const char* file : {"checkpoint.mclw", "history.csv", "summary.json"}) {
        const std::string err = same_bytes(tmp.str("run1") + "/" + file,
                                           tmp.str("run2") + "/" + file,
                                           std::string("training output ") + file);
        if (!err.empty()) return err;
    }
    return {};
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 4) {
        std::fprintf(stderr, "usage: %s <cli-binary> <configs-dir> <reproducing-md>\n", argv[0]);
        return 2;
    }
    const Paths paths{argv[1], argv[2], argv[3]};

    struct Criterion {
        int id;
        const char* name;
        std::function<std::string()> run;
        double budget_seconds;
    };
    const std::vector<Criterion> criteria{
        {1, "banded masks match the enumeration oracle exhaustively",
         [] { return mask_oracle_sweep(); }, 60.0},
        {2, "analytic gradients match central finite differences",
         [] { return gradient_fidelity(); }, 120.0},
        {3, "off-band weight gradients are exactly zero",
         [] { return masked_gradient_sparsity(); }, 0.0},
        {4, "degenerate settings reduce to the plain variants",
         [] { return equivalence_degeneracies(); }, 0.0},
        {5, "segment arithmetic is exact and self-consistent",
         [] { return shape_arithmetic(); }, 0.0},
        {6, "spectrogram and mel mapping match naive references",
         [] { return dsp_fidelity(); }, 0.0},
        {7, "synthetic-band cross-validation reaches 0.9 accuracy",
         [&] { return pipeline_smoke(paths); }, 300.0},
        {8, "shipped dataset configs encode the reference architecture",
         [&] { return reference_configs(paths); }, 0.0},
        {9, "preprocess, mask, and training rerun byte-identically",
         [&] { return rerun_determinism(paths); }, 0.0},
    };

    bool all_ok = true;
    for (const Criterion& criterion : criteria) {
        const auto start = std::chrono::steady_clock::now();
        std::string failure;
        try {
            failure = criterion.run();
        } catch (const std::exception& err) {
            failure = std::string("exception: ") + err.what();
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (failure.empty() && criterion.budget_seconds > 0.0 &&
            seconds > criterion.budget_seconds) {
            std::ostringstream over;
            over << "took " << seconds << " s, budget is " << criterion.budget_seconds << " s";
            failure = over.str();
        }
        std::printf("%s  %d. %s  [%.1f s]\n", failure.empty() ? "PASS" : "FAIL", criterion.id,
                    criterion.name, seconds);
        if (!failure.empty()) {
            std::printf("      -> %s\n", failure.c_str());
            all_ok = false;
        }
        std::fflush(stdout);
    }

    std::printf("%s\n", all_ok ? "acceptance: all criteria hold"
                               : "acceptance: at least one criterion failed");
    return all_ok ? 0 : 1;
}
