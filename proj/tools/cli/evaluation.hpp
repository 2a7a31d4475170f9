// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chanpred Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "chanpred/arkalman.hpp"
#include "chanpred/dataset.hpp"
#include "chanpred/evalsuite.hpp"
#include "chanpred/nn/model.hpp"

namespace chanpred::cli {

/// Raw complex slots of one drop, rebuilt from its normalised samples.
struct Sequence {
    std::uint64_t drop_id = 0;
    std::int64_t first_slot = 0;
    std::vector<chan::SlotGrids> slots;
};

/// One prediction target: slot `target` of a sequence, with the dataset
/// samples predicting it ordered by port, real before imaginary.
struct EvalWindow {
    std::size_t sequence = 0;
    std::size_t target = 0;
    std::vector<std::size_t> samples;
};

/// Windows whose target has `history` earlier slots (the KF window) and
/// `horizon - 1` later ones (for rollouts), so every predictor and every
/// rollout length is scored on the same targets.
struct EvalPlan {
    const data::Dataset *dataset = nullptr;
    std::size_t ports = 0;
    std::vector<Sequence> sequences;
    std::vector<EvalWindow> windows;

    std::size_t sample_count() const { return windows.size() * 2 * ports; }
};

EvalPlan plan_evaluation(const data::Dataset &dataset, std::size_t history, std::size_t horizon);

/// predictions[s] holds sample_count() images for step s + 1, in window then
/// sample order.
using StepPredictions = std::vector<std::vector<float>>;

StepPredictions model_predictions(const EvalPlan &plan, nn::Model<float> &model, std::size_t steps);
// Ground truth in place of a model (plumbing check: every step scores zero).
StepPredictions oracle_predictions(const EvalPlan &plan, std::size_t steps);

/// Mean over samples of the per-image l1 against the normalised truth of step `step` (1-based).
double predictions_l1(const EvalPlan &plan, std::span<const float> predictions, std::size_t step);
std::vector<double> rollout_l1(const EvalPlan &plan, const StepPredictions &predictions);

/// Persistence: the last conditioning state predicts the target.
double aged_l1(const EvalPlan &plan);

std::vector<chan::SlotGrids> kf_predictions(const EvalPlan &plan, const ark::KfConfig &config,
                                            std::size_t *fallbacks = nullptr);
double kf_l1(const EvalPlan &plan, const std::vector<chan::SlotGrids> &predictions);
// Per-window (aged, kf) l1 pairs.
std::vector<std::pair<double, double>> per_window_l1(const EvalPlan &plan,
                                                      const std::vector<chan::SlotGrids> &kf);

/// Pools every (window, t, f) element. `kf` and `dl` may be empty to skip the mode.
eval::CapacityReport capacity_comparison(const EvalPlan &plan, const std::vector<chan::SlotGrids> &kf,
                                         std::span<const float> dl, double rho_db, double epsilon);

} // namespace chanpred::cli
