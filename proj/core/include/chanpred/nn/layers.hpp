// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chanpred Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "chanpred/nn/tensor.hpp"
#include "chanpred/rng.hpp"

namespace chanpred::nn {

enum class LayerKind { conv, transposed_conv, batch_norm, leaky_relu, relu, tanh, dropout, concat_skip };

const char *to_string(LayerKind kind);

/// Kernel, stride and zero padding per axis (h = time, w = frequency).
struct ConvGeometry {
    std::size_t kh = 3, kw = 3;
    std::size_t sh = 1, sw = 1;
    std::size_t ph = 1, pw = 1;

    // Output extent of a convolution; throws ShapeError when it would be < 1.
    std::size_t conv_out(std::size_t in, bool rows) const;
    // Output extent of the transposed convolution (inverse of conv_out).
    std::size_t tconv_out(std::size_t in, bool rows) const;

    friend bool operator==(const ConvGeometry &, const ConvGeometry &) = default;
};

template <typename T>
struct ParamRef {
    std::span<T> value;
    std::span<T> grad;
};

template <typename T>
struct ConvGrads {
    Tensor<T> dx;
    std::vector<T> dweight;
    std::vector<T> dbias;
};

// Cross-correlation. weight is [out][in][kh][kw].
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T> &x, std::span<const T> weight, std::span<const T> bias,
                         std::size_t out_channels, const ConvGeometry &g, std::size_t threads = 1);
template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T> &x, const Tensor<T> &dy, std::span<const T> weight,
                             const ConvGeometry &g, std::size_t threads = 1);

// Adjoint of conv2d with the same geometry. weight is [in][out][kh][kw], so a
// conv weight [C_o][C_i] is directly usable as a transposed weight mapping
// C_o channels back to C_i.
template <typename T>
Tensor<T> tconv2d_forward(const Tensor<T> &x, std::span<const T> weight, std::span<const T> bias,
                          std::size_t out_channels, const ConvGeometry &g, std::size_t threads = 1);
template <typename T>
ConvGrads<T> tconv2d_backward(const Tensor<T> &x, const Tensor<T> &dy, std::span<const T> weight,
                              const ConvGeometry &g, std::size_t threads = 1);

template <typename T>
class Layer {
public:
    virtual ~Layer() = default;

    virtual LayerKind kind() const = 0;
    virtual Shape output_shape(const Shape &in) const = 0;
    virtual Tensor<T> forward(const Tensor<T> &x, bool training) = 0;
    // Returns dL/dx and accumulates parameter gradients.
    virtual Tensor<T> backward(const Tensor<T> &dy) = 0;

    virtual std::vector<ParamRef<T>> parameters() { return {}; }
    // Non-trainable state saved with the model (batch-norm running statistics).
    virtual std::vector<std::span<T>> buffers() { return {}; }
    virtual void set_threads(std::size_t) {}
};

template <typename T>
class Conv2d : public Layer<T> {
public:
    Conv2d(std::size_t in_channels, std::size_t out_channels, ConvGeometry geometry);

    LayerKind kind() const override { return LayerKind::conv; }
    Shape output_shape(const Shape &in) const override;
    Tensor<T> forward(const Tensor<T> &x, bool training) override;
    Tensor<T> backward(const Tensor<T> &dy) override;
    std::vector<ParamRef<T>> parameters() override;
    void set_threads(std::size_t n) override { threads_ = n; }

    std::span<T> weight() { return weight_; }
    std::span<T> bias() { return bias_; }
    const ConvGeometry &geometry() const { return geometry_; }

private:
    std::size_t in_, out_;
    ConvGeometry geometry_;
    std::vector<T> weight_, bias_, dweight_, dbias_;
    Tensor<T> input_;
    std::size_t threads_ = 1;
};

template <typename T>
class TransposedConv2d : public Layer<T> {
public:
    TransposedConv2d(std::size_t in_channels, std::size_t out_channels, ConvGeometry geometry);

    LayerKind kind() const override { return LayerKind::transposed_conv; }
    Shape output_shape(const Shape &in) const override;
    Tensor<T> forward(const Tensor<T> &x, bool training) override;
    Tensor<T> backward(const Tensor<T> &dy) override;
    std::vector<ParamRef<T>> parameters() override;
    void set_threads(std::size_t n) override { threads_ = n; }

    std::span<T> weight() { return weight_; }
    std::span<T> bias() { return bias_; }

private:
    std::size_t in_, out_;
    ConvGeometry geometry_;
    std::vector<T> weight_, bias_, dweight_, dbias_;
    Tensor<T> input_;
    std::size_t threads_ = 1;
};

/// Per-channel batch normalisation. Training mode normalises with batch
/// statistics (biased variance) and folds them into the running estimates as
/// running = momentum * running + (1 - momentum) * batch.
template <typename T>
class BatchNorm2d : public Layer<T> {
public:
    BatchNorm2d(std::size_t channels, T epsilon = T(1e-5), T momentum = T(0.9));

    LayerKind kind() const override { return LayerKind::batch_norm; }
    Shape output_shape(const Shape &in) const override { return in; }
    Tensor<T> forward(const Tensor<T> &x, bool training) override;
    Tensor<T> backward(const Tensor<T> &dy) override;
    std::vector<ParamRef<T>> parameters() override;
    std::vector<std::span<T>> buffers() override;

    std::span<T> gamma() { return gamma_; }
    std::span<T> beta() { return beta_; }
    std::span<T> running_mean() { return running_mean_; }
    std::span<T> running_var() { return running_var_; }

private:
    std::size_t channels_;
    T epsilon_, momentum_;
    std::vector<T> gamma_, beta_, dgamma_, dbeta_, running_mean_, running_var_;
    Tensor<T> xhat_;
    std::vector<T> inv_std_;
    bool last_training_ = false;
};

template <typename T>
class LeakyReLU : public Layer<T> {
public:
    explicit LeakyReLU(T slope) : slope_(slope) {}
    LayerKind kind() const override { return LayerKind::leaky_relu; }
    Shape output_shape(const Shape &in) const override { return in; }
    Tensor<T> forward(const Tensor<T> &x, bool training) override;
    Tensor<T> backward(const Tensor<T> &dy) override;

private:
    T slope_;
    Tensor<T> input_;
};

template <typename T>
class ReLU : public Layer<T> {
public:
    LayerKind kind() const override { return LayerKind::relu; }
    Shape output_shape(const Shape &in) const override { return in; }
    Tensor<T> forward(const Tensor<T> &x, bool training) override;
    Tensor<T> backward(const Tensor<T> &dy) override;

private:
    Tensor<T> input_;
};

template <typename T>
class Tanh : public Layer<T> {
public:
    LayerKind kind() const override { return LayerKind::tanh; }
    Shape output_shape(const Shape &in) const override { return in; }
    Tensor<T> forward(const Tensor<T> &x, bool training) override;
    Tensor<T> backward(const Tensor<T> &dy) override;

private:
    Tensor<T> output_;
};

/// Inverted dropout: kept units are scaled by 1 / (1 - rate) during training;
/// inference is the identity.
template <typename T>
class Dropout : public Layer<T> {
public:
    Dropout(T rate, std::uint64_t seed);
    LayerKind kind() const override { return LayerKind::dropout; }
    Shape output_shape(const Shape &in) const override { return in; }
    Tensor<T> forward(const Tensor<T> &x, bool training) override;
    Tensor<T> backward(const Tensor<T> &dy) override;

    void reseed(std::uint64_t seed) { rng_ = Rng(seed); }
    // Reuse the previous mask instead of drawing a new one (gradient checks).
    void freeze_mask(bool on) { frozen_ = on; }

private:
    T rate_;
    Rng rng_;
    std::vector<T> mask_;
    bool frozen_ = false;
    bool last_training_ = false;
};

/// Concatenates the running activation with a stored encoder output along
/// channels: [x, skip].
template <typename T>
class ConcatSkip : public Layer<T> {
public:
    ConcatSkip(std::size_t source, std::size_t skip_channels) : source_(source), skip_channels_(skip_channels) {}
    LayerKind kind() const override { return LayerKind::concat_skip; }
    Shape output_shape(const Shape &in) const override;
    Tensor<T> forward(const Tensor<T> &x, bool training) override;
    Tensor<T> backward(const Tensor<T> &dy) override;

    std::size_t source() const { return source_; }
    void set_skip(const Tensor<T> *skip) { skip_ = skip; }
    const Tensor<T> &skip_gradient() const { return skip_grad_; }

private:
    std::size_t source_;
    std::size_t skip_channels_;
    const Tensor<T> *skip_ = nullptr;
    std::size_t main_channels_ = 0;
    Tensor<T> skip_grad_;
};

} // namespace chanpred::nn
