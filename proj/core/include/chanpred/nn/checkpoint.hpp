// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chanpred Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "chanpred/nn/model.hpp"
#include "chanpred/nn/train.hpp"

namespace chanpred::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Little-endian layout: "CHMD", u32 version, ModelSpec fields, u64 init seed,
/// u64 n + n f32 parameters, u64 n + n f32 buffers (batch-norm running
/// statistics), then the optimizer: u64 steps, f32 lr, beta1, beta2, eps,
/// u64 n + n f32 first moments + n f32 second moments.
struct Checkpoint {
    ModelSpec spec;
    std::uint64_t seed = 0;
    std::vector<float> parameters;
    std::vector<float> buffers;
    AdamConfig adam;
    std::uint64_t steps = 0;
    std::vector<float> first_moment;
    std::vector<float> second_moment;

    friend bool operator==(const Checkpoint &, const Checkpoint &) = default;
};

Checkpoint make_checkpoint(Model<float> &model, const Adam<float> &optimizer);
Model<float> restore_model(const Checkpoint &checkpoint);
Adam<float> restore_optimizer(const Checkpoint &checkpoint);

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint &checkpoint);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes); // FormatError on malformed input

void save_checkpoint(const Checkpoint &checkpoint, const std::filesystem::path &path);
Checkpoint load_checkpoint(const std::filesystem::path &path);

} // namespace chanpred::nn
