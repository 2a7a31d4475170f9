// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chanpred Authors

#include <benchmark/benchmark.h>

#include <random>

#include "chanpred/arkalman.hpp"
#include "chanpred/chanmodel.hpp"
#include "chanpred/nn/layers.hpp"
#include "chanpred/nn/model.hpp"

using namespace chanpred;

namespace {

nn::Tensor<float> random_tensor(nn::Shape s, std::uint32_t seed) {
    std::mt19937 gen(seed);
    std::normal_distribution<float> d;
    nn::Tensor<float> t(s);
    for (auto &v : t.data()) v = d(gen);
    return t;
}

std::vector<float> random_vector(std::size_t n, std::uint32_t seed) {
    std::mt19937 gen(seed);
    std::normal_distribution<float> d;
    std::vector<float> v(n);
    for (auto &x : v) x = d(gen);
    return v;
}

// Args: channels, frequency extent, threads. Time extent 14, batch 16.
void BM_ConvForward(benchmark::State &state) {
    const auto c = static_cast<std::size_t>(state.range(0));
    const auto w = static_cast<std::size_t>(state.range(1));
    const auto threads = static_cast<std::size_t>(state.range(2));
    const nn::ConvGeometry g{3, 4, 1, 2, 1, 1};
    const auto x = random_tensor({16, c, 14, w}, 1);
    const auto weight = random_vector(2 * c * c * 12, 2);
    const std::vector<float> bias(2 * c, 0.0f);
    for (auto _ : state) benchmark::DoNotOptimize(nn::conv2d_forward<float>(x, weight, bias, 2 * c, g, threads));
    state.SetItemsProcessed(state.iterations() * 16);
}
BENCHMARK(BM_ConvForward)->Args({8, 64, 1})->Args({32, 64, 1})->Args({32, 600, 1})->Args({32, 600, 4});

void BM_ConvBackward(benchmark::State &state) {
    const auto c = static_cast<std::size_t>(state.range(0));
    const auto w = static_cast<std::size_t>(state.range(1));
    const nn::ConvGeometry g{3, 4, 1, 2, 1, 1};
    const auto x = random_tensor({16, c, 14, w}, 1);
    const auto weight = random_vector(2 * c * c * 12, 2);
    const auto dy = random_tensor({16, 2 * c, 14, g.conv_out(w, false)}, 3);
    for (auto _ : state) benchmark::DoNotOptimize(nn::conv2d_backward<float>(x, dy, weight, g));
    state.SetItemsProcessed(state.iterations() * 16);
}
BENCHMARK(BM_ConvBackward)->Args({8, 64})->Args({32, 64});

void BM_TconvForward(benchmark::State &state) {
    const auto c = static_cast<std::size_t>(state.range(0));
    const nn::ConvGeometry g{3, 4, 1, 2, 1, 1};
    const auto x = random_tensor({16, 2 * c, 14, 32}, 1);
    const auto weight = random_vector(2 * c * c * 12, 2);
    const std::vector<float> bias(c, 0.0f);
    for (auto _ : state) benchmark::DoNotOptimize(nn::tconv2d_forward<float>(x, weight, bias, c, g));
    state.SetItemsProcessed(state.iterations() * 16);
}
BENCHMARK(BM_TconvForward)->Arg(8)->Arg(32);

void BM_ModelTrainStep(benchmark::State &state) {
    nn::ModelSpec spec;
    spec.depth = static_cast<std::size_t>(state.range(0));
    spec.base_channels = 8;
    spec.m = 4;
    spec.rows = 8;
    spec.cols = 64;
    nn::Model<float> model(spec, 1);
    const auto x = random_tensor(spec.input_shape(16), 4);
    for (auto _ : state) {
        auto y = model.forward(x, true);
        benchmark::DoNotOptimize(model.backward(y));
    }
    state.SetItemsProcessed(state.iterations() * 16);
}
BENCHMARK(BM_ModelTrainStep)->Arg(2)->Arg(4)->Arg(6)->Unit(benchmark::kMillisecond);

void BM_GenerateSlot(benchmark::State &state) {
    chan::DropConfig cfg;
    if (state.range(0)) cfg.grid = chan::GridSpec::full_scale();
    const auto drop = chan::sample_drop(cfg, 7);
    std::int64_t slot = 0;
    for (auto _ : state) benchmark::DoNotOptimize(chan::generate_slot(drop, slot++));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(cfg.grid.num_subcarriers *
                                                                          cfg.grid.num_symbols *
                                                                          cfg.grid.num_tx_ports));
}
BENCHMARK(BM_GenerateSlot)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_KfPredictGrid(benchmark::State &state) {
    chan::DropConfig cfg;
    cfg.grid.num_tx_ports = 2;
    const auto drop = chan::sample_drop(cfg, 11);
    ark::KfConfig kf;
    kf.threads = static_cast<std::size_t>(state.range(0));
    const auto history = chan::generate_slots(drop, 0, kf.window);
    for (auto _ : state) benchmark::DoNotOptimize(ark::kf_predict_grid(history, kf));
    state.SetItemsProcessed(state.iterations() *
                            static_cast<std::int64_t>(cfg.grid.num_subcarriers * cfg.grid.num_symbols * 2));
}
BENCHMARK(BM_KfPredictGrid)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
