#include <benchmark/benchmark.h>

#include <vector>

#include "mclnn/adam.hpp"
#include "mclnn/fft.hpp"
#include "mclnn/layers.hpp"
#include "mclnn/mask.hpp"
#include "mclnn/matrix.hpp"
#include "mclnn/model.hpp"
#include "mclnn/rng.hpp"

using namespace mclnn;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
    Matrix m(rows, cols);
    for (double& v : m.values()) v = rng.uniform(-1.0, 1.0);
    return m;
}

void BM_matmul(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(1);
    const Matrix a = random_matrix(n, n, rng);
    const Matrix b = random_matrix(n, n, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(matmul(a, b));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_matmul)->Arg(32)->Arg(128)->Arg(256);

void BM_rfft_2048(benchmark::State& state) {
    Rng rng(2);
    std::vector<double> signal(2048);
    for (double& v : signal) v = rng.uniform(-1.0, 1.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(rfft(signal));
    }
}
BENCHMARK(BM_rfft_2048);

void BM_build_mask_256x220(benchmark::State& state) {
    const MaskSpec spec{256, 220, 40, -10};
    for (auto _ : state) {
        benchmark::DoNotOptimize(build_mask(spec));
    }
}
BENCHMARK(BM_build_mask_256x220);

void BM_clnn_forward(benchmark::State& state) {
    const auto order = static_cast<int>(state.range(0));
    const auto width = static_cast<std::size_t>(state.range(1));
    const std::size_t features = 256;
    Rng rng(3);
    const Mask mask = build_mask(MaskSpec{static_cast<std::int64_t>(features),
                                          static_cast<std::int64_t>(width), 40, -10});
    const ClnnLayerParams layer =
        init_clnn_layer(features, width, order, TransferKind::sigmoid, mask, rng);
    const FrameBlock input = random_matrix(static_cast<std::size_t>(2 * order + 11), features,
                                           rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(clnn_forward(input, layer));
    }
}
BENCHMARK(BM_clnn_forward)->Args({4, 100})->Args({15, 220});

void BM_predict_smoke_model(benchmark::State& state) {
    ModelConfig config;
    config.input_features = 40;
    config.class_count = 3;
    ClnnLayerConfig layer;
    layer.order = 1;
    layer.width = 24;
    layer.mask = MaskSettings{5, 2};
    config.clnn_layers = {layer, layer};
    config.clnn_layers[1].width = 16;
    config.pooling = PoolingConfig{PoolKind::mean, 3};
    config.dense_head = {DenseLayerConfig{10, TransferKind::sigmoid}};

    Rng rng(4);
    const ModelParams params = build_model(config, rng);
    const FrameBlock segment = random_matrix(segment_size(config), config.input_features, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(predict(params, segment));
    }
}
BENCHMARK(BM_predict_smoke_model);

void BM_adam_step(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(5);
    std::vector<double> params(n);
    std::vector<double> grads(n);
    for (double& v : params) v = rng.uniform(-1.0, 1.0);
    for (double& v : grads) v = rng.uniform(-1.0, 1.0);
    AdamState adam(n);
    for (auto _ : state) {
        adam_step(params, grads, adam);
        benchmark::DoNotOptimize(params.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(n));
}
BENCHMARK(BM_adam_step)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
