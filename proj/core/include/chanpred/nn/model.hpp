// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chanpred Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "chanpred/dataset.hpp"
#include "chanpred/nn/layers.hpp"

namespace chanpred::nn {

enum class Variant { baseline, image_completion, next_frame };
enum class Arch { ae, unet };

const char *to_string(Variant v);
const char *to_string(Arch a);
Variant parse_variant(const std::string &s); // ConfigError on unknown names
Arch parse_arch(const std::string &s);

struct ModelSpec {
    Variant variant = Variant::next_frame;
    Arch arch = Arch::unet;
    std::size_t depth = 4;          // encoder blocks in the shared trunk
    std::size_t base_channels = 8;  // first encoder width; doubles per block up to 8x
    std::size_t m = 4;              // memory
    std::size_t rows = 8;           // T
    std::size_t cols = 64;          // F
    std::size_t parameter_budget = 0; // 0: the next_frame unet count for the same depth/base/m/grid
    float leaky_slope = 0.2f;
    float dropout_rate = 0.5f;
    float bn_epsilon = 1e-5f;
    float bn_momentum = 0.9f;

    void validate() const;
    Shape input_shape(std::size_t batch = 1) const;
    Shape output_shape(std::size_t batch = 1) const;

    friend bool operator==(const ModelSpec &, const ModelSpec &) = default;
};

struct LayerSpec {
    LayerKind kind = LayerKind::conv;
    ConvGeometry geometry{};
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    float negative_slope = 0.0f;
    float drop_rate = 0.0f;
    std::ptrdiff_t skip_source = -1; // layer whose output is concatenated
};

struct ModelPlan {
    std::vector<LayerSpec> layers;
    double decoder_scale = 1.0;
    std::size_t parameter_count = 0;
    std::size_t parameter_budget = 0;
};

std::size_t count_parameters(std::span<const LayerSpec> layers);

/// Layer list for a fixed decoder width multiplier.
std::vector<LayerSpec> plan_layers(const ModelSpec &spec, double decoder_scale);

/// Resolves the budget and picks the decoder width multiplier whose parameter
/// count lands closest to it.
ModelPlan plan_model(const ModelSpec &spec);

template <typename T>
class Model {
public:
    Model(const ModelSpec &spec, std::uint64_t seed);

    const ModelSpec &spec() const { return spec_; }
    const ModelPlan &plan() const { return plan_; }
    std::uint64_t seed() const { return seed_; }
    std::size_t parameter_count() const { return plan_.parameter_count; }
    std::size_t num_layers() const { return layers_.size(); }
    Layer<T> &layer(std::size_t i) { return *layers_.at(i); }

    Tensor<T> forward(const Tensor<T> &x, bool training);
    Tensor<T> backward(const Tensor<T> &dy);

    std::vector<ParamRef<T>> parameters();
    std::vector<std::span<T>> buffers();
    void zero_grad();

    void set_threads(std::size_t threads);
    void reseed_dropout(std::uint64_t seed);
    void freeze_dropout(bool on);

private:
    ModelSpec spec_;
    ModelPlan plan_;
    std::uint64_t seed_;
    std::vector<std::unique_ptr<Layer<T>>> layers_;
    std::vector<Tensor<T>> outputs_;
    std::vector<bool> is_skip_source_;
};

template <typename T>
Model<T> build_model(const ModelSpec &spec, std::uint64_t seed) {
    return Model<T>(spec, seed);
}

// ---- variant I/O layout ----
// A sample's pixels are (m+1) row-major T x F images back to back, so the
// baseline input ((m T) x F) and the next-frame input (m channels) are the
// same memory viewed with a different shape.

// Writes one input image (input_shape(1).size() values) from the m conditioning states.
template <typename T>
void assemble_input(const ModelSpec &spec, std::span<const float> window, T *dst);

// Training target for one sample (output_shape(1).size() values).
template <typename T>
void assemble_target(const ModelSpec &spec, const data::Sample &sample, T *dst);

template <typename T>
Tensor<T> input_batch(const ModelSpec &spec, std::span<const data::Sample> samples,
                      std::span<const std::size_t> index);
template <typename T>
Tensor<T> target_batch(const ModelSpec &spec, std::span<const data::Sample> samples,
                       std::span<const std::size_t> index);

// The predicted T x F block of element n of a model output.
template <typename T>
std::span<const T> predicted_block(const ModelSpec &spec, const Tensor<T> &output, std::size_t n);

void check_sample(const ModelSpec &spec, const data::Sample &sample);

/// Inference-mode prediction of the next state from m images (m*T*F values).
std::vector<float> predict(Model<float> &model, std::span<const float> window);
/// Batched form: `windows` holds count consecutive windows; returns count images.
std::vector<float> predict_batch(Model<float> &model, std::span<const float> windows, std::size_t count);

/// Autoregressive prediction: each output is appended to the window and the
/// oldest state dropped. Returns steps images.
std::vector<std::vector<float>> rollout(Model<float> &model, std::span<const float> window, std::size_t steps);
/// Batched rollout; result[s] holds count images for step s+1.
std::vector<std::vector<float>> rollout_batch(Model<float> &model, std::span<const float> windows,
                                              std::size_t count, std::size_t steps);

} // namespace chanpred::nn
