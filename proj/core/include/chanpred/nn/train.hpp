// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chanpred Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "chanpred/dataset.hpp"
#include "chanpred/nn/model.hpp"

namespace chanpred::nn {

template <typename T>
struct LossResult {
    double loss = 0.0;
    Tensor<T> grad;
};

/// l1 = mean |pred - target| with gradient sign(pred - target) / count
/// (0 at exact ties).
template <typename T>
LossResult<T> mae_loss(const Tensor<T> &pred, const Tensor<T> &target);

struct AdamConfig {
    float learning_rate = 2e-4f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float epsilon = 1e-8f;

    friend bool operator==(const AdamConfig &, const AdamConfig &) = default;
};

template <typename T>
class Adam {
public:
    explicit Adam(AdamConfig config = {}) : config_(config) {}

    void step(std::span<const ParamRef<T>> params);

    const AdamConfig &config() const { return config_; }
    std::uint64_t steps() const { return steps_; }
    // Moments of all parameter tensors concatenated in parameter order.
    const std::vector<T> &first_moment() const { return m_; }
    const std::vector<T> &second_moment() const { return v_; }
    void restore(const AdamConfig &config, std::uint64_t steps, std::vector<T> m, std::vector<T> v);

private:
    AdamConfig config_;
    std::uint64_t steps_ = 0;
    std::vector<T> m_, v_;
};

struct EpochRecord {
    std::size_t epoch = 0; // 1-based
    double train_l1 = 0.0;
    double val_l1 = 0.0;   // NaN when there is no validation set
};

struct TrainingReport {
    std::vector<EpochRecord> epochs;

    std::string to_csv() const;
    void write_csv(const std::filesystem::path &path) const;
};

struct TrainConfig {
    std::size_t epochs = 200;
    std::size_t batch_size = 16;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    std::function<void(const EpochRecord &)> on_epoch;
};

/// Mini-batch training on the MAE loss. Each epoch reshuffles with a stream
/// derived from config.seed; a trailing batch of one sample is skipped because
/// batch normalisation needs two. A non-finite loss raises TrainingError.
TrainingReport train(Model<float> &model, Adam<float> &optimizer, std::span<const data::Sample> train_set,
                     std::span<const data::Sample> val_set, const TrainConfig &config);

/// Inference-mode l1 on the predicted T x F block, averaged over samples.
double evaluate_l1(Model<float> &model, std::span<const data::Sample> samples, std::size_t batch_size = 64);

} // namespace chanpred::nn
