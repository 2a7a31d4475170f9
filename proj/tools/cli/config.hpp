// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chanpred Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include "chanpred/arkalman.hpp"
#include "chanpred/chanmodel.hpp"
#include "chanpred/nn/model.hpp"
#include "chanpred/nn/train.hpp"

namespace chanpred::cli {

struct TrainSettings {
    std::size_t epochs = 200;
    std::size_t batch_size = 16;
    float learning_rate = 2e-4f;
};

struct EvalSettings {
    double rho_db = 10.0;
    double epsilon = 0.1;
    // Evaluation windows must leave room for this many rollout steps.
    std::size_t horizon = 4;
};

struct TraceSettings {
    std::size_t snapshots = 200;
    double period = 5e-3; // s
    std::size_t stride = 4;
    double snr_db = 30.0;
};

/// Everything an experiment needs. Field defaults are the documented defaults.
struct ExperimentConfig {
    std::uint64_t seed = 1;
    chan::DropConfig drops;
    std::size_t drop_count = 20;
    std::size_t slots_per_drop = 18;
    std::size_t m = 4;
    double val_fraction = 0.1;
    nn::ModelSpec model;
    TrainSettings train;
    ark::KfConfig kf;
    EvalSettings eval;
    TraceSettings trace;

    // Model spec for a dataset of the given image geometry.
    nn::ModelSpec model_spec(std::size_t rows, std::size_t cols) const;
};

/// Parses sectioned key = value text. Unknown sections or keys and malformed
/// values raise ConfigError naming the key path (e.g. "grid.subcarriers").
ExperimentConfig parse_config(const std::string &text);
ExperimentConfig load_config(const std::filesystem::path &path);

/// Cross-field checks; ConfigError with the key path on failure.
void validate(const ExperimentConfig &config);

/// Every schema key with its current value, grouped by section.
std::string format_config(const ExperimentConfig &config);

} // namespace chanpred::cli
