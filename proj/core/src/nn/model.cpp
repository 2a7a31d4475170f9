// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chanpred Authors

#include "chanpred/nn/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "chanpred/rng.hpp"

namespace chanpred::nn {

const char *to_string(Variant v) {
    switch (v) {
    case Variant::baseline: return "baseline";
    case Variant::image_completion: return "image_completion";
    case Variant::next_frame: return "next_frame";
    }
    return "?";
}

const char *to_string(Arch a) { return a == Arch::ae ? "ae" : "unet"; }

Variant parse_variant(const std::string &s) {
    for (Variant v : {Variant::baseline, Variant::image_completion, Variant::next_frame})
        if (s == to_string(v)) return v;
    throw ConfigError("unknown model variant '" + s + "' (expected baseline, image_completion or next_frame)");
}

Arch parse_arch(const std::string &s) {
    if (s == "ae") return Arch::ae;
    if (s == "unet") return Arch::unet;
    throw ConfigError("unknown model arch '" + s + "' (expected ae or unet)");
}

void ModelSpec::validate() const {
    if (depth < 1) throw ConfigError("model.depth must be >= 1");
    if (base_channels < 1) throw ConfigError("model.base_channels must be >= 1");
    if (m < 1) throw ConfigError("model.m must be >= 1");
    if (rows < 1 || cols < 1) throw ConfigError("model grid must be at least 1 x 1");
    std::size_t max_depth = 0;
    for (std::size_t c = cols; c % 2 == 0; c /= 2) ++max_depth;
    if (depth > max_depth) {
        if (max_depth == 0)
            throw ConfigError("model.depth: F=" + std::to_string(cols) +
                              " is odd and cannot be halved; use an even number of subcarriers");
        throw ConfigError("model.depth: F=" + std::to_string(cols) + " is not divisible by 2^" +
                          std::to_string(depth) + "; use depth <= " + std::to_string(max_depth));
    }
    if (!(leaky_slope >= 0.0f)) throw ConfigError("model.leaky_slope must be >= 0");
    if (!(dropout_rate >= 0.0f && dropout_rate < 1.0f)) throw ConfigError("model.dropout must be in [0, 1)");
    if (!(bn_epsilon > 0.0f)) throw ConfigError("model.bn_epsilon must be > 0");
    if (!(bn_momentum >= 0.0f && bn_momentum < 1.0f)) throw ConfigError("model.bn_momentum must be in [0, 1)");
}

Shape ModelSpec::input_shape(std::size_t batch) const {
    switch (variant) {
    case Variant::baseline: return {batch, 1, m * rows, cols};
    case Variant::image_completion: return {batch, 1, (m + 1) * rows, cols};
    case Variant::next_frame: return {batch, m, rows, cols};
    }
    return {};
}

Shape ModelSpec::output_shape(std::size_t batch) const {
    if (variant == Variant::image_completion) return {batch, 1, (m + 1) * rows, cols};
    return {batch, 1, rows, cols};
}

namespace {

// Stride 2k: kernel 4k / pad k; stride 1: kernel 3 / pad 1; odd stride s > 1: kernel s / pad 0.
void axis_geometry(std::size_t stride, std::size_t &k, std::size_t &s, std::size_t &p) {
    s = stride;
    if (stride == 1) {
        k = 3;
        p = 1;
    } else if (stride % 2 == 0) {
        k = 2 * stride;
        p = stride / 2;
    } else {
        k = stride;
        p = 0;
    }
}

ConvGeometry geometry_for(std::size_t sh, std::size_t sw) {
    ConvGeometry g;
    axis_geometry(sh, g.kh, g.sh, g.ph);
    axis_geometry(sw, g.kw, g.sw, g.pw);
    return g;
}

struct Activation {
    std::size_t layer; // index of the activation layer producing it
    std::size_t c, h, w;
    bool used = false;
};

class Planner {
public:
    explicit Planner(const ModelSpec &spec) : spec_(spec) {}

    void conv(std::size_t out, std::size_t sh, std::size_t sw) {
        LayerSpec l;
        l.kind = LayerKind::conv;
        l.geometry = geometry_for(sh, sw);
        l.in_channels = c_;
        l.out_channels = out;
        h_ = l.geometry.conv_out(h_, true);
        w_ = l.geometry.conv_out(w_, false);
        c_ = out;
        layers.push_back(l);
    }

    void tconv(std::size_t out, const ConvGeometry &g) {
        LayerSpec l;
        l.kind = LayerKind::transposed_conv;
        l.geometry = g;
        l.in_channels = c_;
        l.out_channels = out;
        h_ = g.tconv_out(h_, true);
        w_ = g.tconv_out(w_, false);
        c_ = out;
        layers.push_back(l);
    }

    void simple(LayerKind kind, float slope = 0.0f, float rate = 0.0f) {
        LayerSpec l;
        l.kind = kind;
        l.in_channels = l.out_channels = c_;
        l.negative_slope = slope;
        l.drop_rate = rate;
        if (kind == LayerKind::batch_norm) l.geometry = {};
        layers.push_back(l);
    }

    void concat(Activation &src) {
        LayerSpec l;
        l.kind = LayerKind::concat_skip;
        l.in_channels = c_;
        l.out_channels = c_ + src.c;
        l.skip_source = static_cast<std::ptrdiff_t>(src.layer);
        c_ += src.c;
        src.used = true;
        layers.push_back(l);
    }

    Activation mark() const { return {layers.size() - 1, c_, h_, w_}; }

    void reset(std::size_t c, std::size_t h, std::size_t w) {
        c_ = c;
        h_ = h;
        w_ = w;
    }
    std::size_t h() const { return h_; }
    std::size_t w() const { return w_; }

    std::vector<LayerSpec> layers;

private:
    const ModelSpec &spec_;
    std::size_t c_ = 0, h_ = 0, w_ = 0;
};

std::size_t encoder_width(const ModelSpec &spec, std::size_t i) {
    return spec.base_channels << std::min<std::size_t>(i, 3);
}

} // namespace

std::vector<LayerSpec> plan_layers(const ModelSpec &spec, double decoder_scale) {
    spec.validate();
    if (!(decoder_scale > 0.0)) throw ConfigError("decoder width multiplier must be > 0");
    const Shape in = spec.input_shape(1);
    Planner p(spec);
    p.reset(in.c, in.h, in.w);
    std::vector<Activation> encoder;

    bool first = true;
    if (spec.variant == Variant::baseline) {
        // Two input convolutions fold the m stacked states back to T rows.
        std::size_t a = spec.m;
        for (std::size_t d = 1; d <= spec.m; ++d)
            if (spec.m % d == 0 && d * d >= spec.m) {
                a = d;
                break;
            }
        const std::size_t b = spec.m / a;
        const std::size_t width = std::max<std::size_t>(1, spec.base_channels / 2);
        p.conv(width, a, 1);
        p.simple(LayerKind::leaky_relu, spec.leaky_slope);
        encoder.push_back(p.mark());
        p.conv(width, b, 1);
        p.simple(LayerKind::batch_norm);
        p.simple(LayerKind::leaky_relu, spec.leaky_slope);
        encoder.push_back(p.mark());
        first = false;
    }

    std::vector<ConvGeometry> trunk;
    for (std::size_t i = 0; i < spec.depth; ++i) {
        const std::size_t sh = (p.h() >= 4 && p.h() % 2 == 0) ? 2 : 1;
        p.conv(encoder_width(spec, i), sh, 2);
        trunk.push_back(p.layers.back().geometry);
        if (!first) p.simple(LayerKind::batch_norm);
        first = false;
        p.simple(LayerKind::leaky_relu, spec.leaky_slope);
        encoder.push_back(p.mark());
    }
    encoder.back().used = true; // the bottleneck feeds the decoder directly

    const std::size_t dropouts = 3 * spec.depth / 8;
    const std::size_t out_channels = spec.output_shape(1).c;
    for (std::size_t j = 0; j < spec.depth; ++j) {
        if (j > 0 && spec.arch == Arch::unet) {
            for (auto it = encoder.rbegin(); it != encoder.rend(); ++it)
                if (!it->used && it->h == p.h() && it->w == p.w()) {
                    p.concat(*it);
                    break;
                }
        }
        const bool last = j + 1 == spec.depth;
        const std::size_t width =
            last ? out_channels
                 : std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(
                                                decoder_scale * encoder_width(spec, spec.depth - 2 - j))));
        p.tconv(width, trunk[spec.depth - 1 - j]);
        if (last) {
            p.simple(LayerKind::tanh);
        } else {
            p.simple(LayerKind::batch_norm);
            if (j < dropouts && spec.dropout_rate > 0.0f) p.simple(LayerKind::dropout, 0.0f, spec.dropout_rate);
            p.simple(LayerKind::relu);
        }
    }
    const Shape out = spec.output_shape(1);
    if (p.h() != out.h || p.w() != out.w)
        throw ConfigError("model plan produces " + std::to_string(p.h()) + " x " + std::to_string(p.w()) +
                          " instead of " + std::to_string(out.h) + " x " + std::to_string(out.w));
    return p.layers;
}

std::size_t count_parameters(std::span<const LayerSpec> layers) {
    std::size_t n = 0;
    for (const auto &l : layers) {
        switch (l.kind) {
        case LayerKind::conv:
        case LayerKind::transposed_conv:
            n += l.in_channels * l.out_channels * l.geometry.kh * l.geometry.kw + l.out_channels;
            break;
        case LayerKind::batch_norm: n += 2 * l.in_channels; break;
        default: break;
        }
    }
    return n;
}

ModelPlan plan_model(const ModelSpec &spec) {
    ModelPlan plan;
    plan.parameter_budget = spec.parameter_budget;
    if (plan.parameter_budget == 0) {
        ModelSpec ref = spec;
        ref.variant = Variant::next_frame;
        ref.arch = Arch::unet;
        plan.parameter_budget = count_parameters(plan_layers(ref, 1.0));
    }
    // Parameter count grows monotonically with the multiplier; scan k/64.
    std::size_t best_diff = std::numeric_limits<std::size_t>::max();
    for (int k = 4; k <= 512; ++k) {
        const double s = k / 64.0;
        auto layers = plan_layers(spec, s);
        const std::size_t n = count_parameters(layers);
        const std::size_t diff = n > plan.parameter_budget ? n - plan.parameter_budget : plan.parameter_budget - n;
        if (diff < best_diff || (diff == best_diff && std::abs(s - 1.0) < std::abs(plan.decoder_scale - 1.0))) {
            best_diff = diff;
            plan.decoder_scale = s;
            plan.layers = std::move(layers);
            plan.parameter_count = n;
        }
    }
    return plan;
}

template <typename T>
Model<T>::Model(const ModelSpec &spec, std::uint64_t seed) : spec_(spec), plan_(plan_model(spec)), seed_(seed) {
    Rng rng(seed);
    is_skip_source_.assign(plan_.layers.size(), false);
    for (std::size_t i = 0; i < plan_.layers.size(); ++i) {
        const LayerSpec &l = plan_.layers[i];
        const T eps = static_cast<T>(spec.bn_epsilon), mom = static_cast<T>(spec.bn_momentum);
        switch (l.kind) {
        case LayerKind::conv:
        case LayerKind::transposed_conv: {
            // Zero-mean Gaussian scaled by the number of inputs feeding each output.
            std::size_t fan_in = l.in_channels * l.geometry.kh * l.geometry.kw;
            if (l.kind == LayerKind::transposed_conv) fan_in = std::max<std::size_t>(1, fan_in / (l.geometry.sh * l.geometry.sw));
            const double sd = 1.0 / std::sqrt(static_cast<double>(fan_in));
            std::unique_ptr<Layer<T>> layer;
            std::span<T> w;
            if (l.kind == LayerKind::conv) {
                auto c = std::make_unique<Conv2d<T>>(l.in_channels, l.out_channels, l.geometry);
                w = c->weight();
                layer = std::move(c);
            } else {
                auto c = std::make_unique<TransposedConv2d<T>>(l.in_channels, l.out_channels, l.geometry);
                w = c->weight();
                layer = std::move(c);
            }
            for (T &v : w) v = static_cast<T>(sd * rng.normal());
            layers_.push_back(std::move(layer));
            break;
        }
        case LayerKind::batch_norm: layers_.push_back(std::make_unique<BatchNorm2d<T>>(l.in_channels, eps, mom)); break;
        case LayerKind::leaky_relu: layers_.push_back(std::make_unique<LeakyReLU<T>>(static_cast<T>(l.negative_slope))); break;
        case LayerKind::relu: layers_.push_back(std::make_unique<ReLU<T>>()); break;
        case LayerKind::tanh: layers_.push_back(std::make_unique<Tanh<T>>()); break;
        case LayerKind::dropout:
            layers_.push_back(std::make_unique<Dropout<T>>(static_cast<T>(l.drop_rate), seed ^ (0x9e3779b97f4a7c15ULL * (i + 1))));
            break;
        case LayerKind::concat_skip:
            layers_.push_back(std::make_unique<ConcatSkip<T>>(static_cast<std::size_t>(l.skip_source),
                                                              l.out_channels - l.in_channels));
            is_skip_source_[static_cast<std::size_t>(l.skip_source)] = true;
            break;
        }
    }
    outputs_.resize(layers_.size());
}

template <typename T>
Tensor<T> Model<T>::forward(const Tensor<T> &x, bool training) {
    const Shape want = spec_.input_shape(x.shape().n);
    if (x.shape() != want) throw ShapeError("model input: shape " + x.shape().str() + " vs expected " + want.str());
    Tensor<T> cur = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        if (plan_.layers[i].kind == LayerKind::concat_skip) {
            auto &cat = static_cast<ConcatSkip<T> &>(*layers_[i]);
            cat.set_skip(&outputs_[cat.source()]);
        }
        cur = layers_[i]->forward(cur, training);
        if (is_skip_source_[i]) outputs_[i] = cur;
    }
    return cur;
}

template <typename T>
Tensor<T> Model<T>::backward(const Tensor<T> &dy) {
    std::vector<Tensor<T>> pending(layers_.size());
    Tensor<T> g = dy;
    for (std::size_t k = layers_.size(); k-- > 0;) {
        if (!pending[k].empty()) {
            require_same_shape(g.shape(), pending[k].shape(), "skip gradient");
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += pending[k][i];
        }
        g = layers_[k]->backward(g);
        if (plan_.layers[k].kind == LayerKind::concat_skip) {
            auto &cat = static_cast<ConcatSkip<T> &>(*layers_[k]);
            auto &dst = pending[cat.source()];
            if (dst.empty())
                dst = cat.skip_gradient();
            else
                for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += cat.skip_gradient()[i];
        }
    }
    return g;
}

template <typename T>
std::vector<ParamRef<T>> Model<T>::parameters() {
    std::vector<ParamRef<T>> out;
    for (auto &l : layers_)
        for (auto &p : l->parameters()) out.push_back(p);
    return out;
}

template <typename T>
std::vector<std::span<T>> Model<T>::buffers() {
    std::vector<std::span<T>> out;
    for (auto &l : layers_)
        for (auto &b : l->buffers()) out.push_back(b);
    return out;
}

template <typename T>
void Model<T>::zero_grad() {
    for (auto &p : parameters()) std::fill(p.grad.begin(), p.grad.end(), T(0));
}

template <typename T>
void Model<T>::set_threads(std::size_t threads) {
    for (auto &l : layers_) l->set_threads(std::max<std::size_t>(1, threads));
}

template <typename T>
void Model<T>::reseed_dropout(std::uint64_t seed) {
    for (std::size_t i = 0; i < layers_.size(); ++i)
        if (plan_.layers[i].kind == LayerKind::dropout)
            static_cast<Dropout<T> &>(*layers_[i]).reseed(seed ^ (0x9e3779b97f4a7c15ULL * (i + 1)));
}

template <typename T>
void Model<T>::freeze_dropout(bool on) {
    for (std::size_t i = 0; i < layers_.size(); ++i)
        if (plan_.layers[i].kind == LayerKind::dropout) static_cast<Dropout<T> &>(*layers_[i]).freeze_mask(on);
}

void check_sample(const ModelSpec &spec, const data::Sample &sample) {
    if (sample.m != spec.m || sample.rows != spec.rows || sample.cols != spec.cols ||
        sample.pixels.size() != (spec.m + 1) * spec.rows * spec.cols)
        throw ShapeError("sample layout (m=" + std::to_string(sample.m) + ", T=" + std::to_string(sample.rows) +
                         ", F=" + std::to_string(sample.cols) + ") does not match model (m=" + std::to_string(spec.m) +
                         ", T=" + std::to_string(spec.rows) + ", F=" + std::to_string(spec.cols) + ")");
}

template <typename T>
void assemble_input(const ModelSpec &spec, std::span<const float> window, T *dst) {
    const std::size_t image = spec.rows * spec.cols;
    if (window.size() != spec.m * image)
        throw ShapeError("window: expected " + std::to_string(spec.m) + " images of " + std::to_string(spec.rows) +
                         " x " + std::to_string(spec.cols) + " (" + std::to_string(spec.m * image) + " values), got " +
                         std::to_string(window.size()));
    std::copy(window.begin(), window.end(), dst);
    if (spec.variant == Variant::image_completion) std::fill_n(dst + window.size(), image, T(0));
}

template <typename T>
void assemble_target(const ModelSpec &spec, const data::Sample &sample, T *dst) {
    check_sample(spec, sample);
    if (spec.variant == Variant::image_completion)
        std::copy(sample.pixels.begin(), sample.pixels.end(), dst);
    else
        std::ranges::copy(sample.target(), dst);
}

template <typename T>
Tensor<T> input_batch(const ModelSpec &spec, std::span<const data::Sample> samples,
                      std::span<const std::size_t> index) {
    Tensor<T> x(spec.input_shape(index.size()));
    const std::size_t per = spec.input_shape(1).size();
    for (std::size_t n = 0; n < index.size(); ++n) {
        const auto &s = samples[index[n]];
        check_sample(spec, s);
        assemble_input<T>(spec, s.conditioning(), x.ptr() + n * per);
    }
    return x;
}

template <typename T>
Tensor<T> target_batch(const ModelSpec &spec, std::span<const data::Sample> samples,
                       std::span<const std::size_t> index) {
    Tensor<T> y(spec.output_shape(index.size()));
    const std::size_t per = spec.output_shape(1).size();
    for (std::size_t n = 0; n < index.size(); ++n) assemble_target<T>(spec, samples[index[n]], y.ptr() + n * per);
    return y;
}

template <typename T>
std::span<const T> predicted_block(const ModelSpec &spec, const Tensor<T> &output, std::size_t n) {
    const std::size_t per = spec.output_shape(1).size();
    const std::size_t image = spec.rows * spec.cols;
    if (output.shape() != spec.output_shape(output.shape().n) || n >= output.shape().n)
        throw ShapeError("predicted_block: output shape " + output.shape().str());
    return output.data().subspan(n * per + (per - image), image);
}

std::vector<float> predict_batch(Model<float> &model, std::span<const float> windows, std::size_t count) {
    const ModelSpec &spec = model.spec();
    const std::size_t image = spec.rows * spec.cols;
    const std::size_t win = spec.m * image;
    if (windows.size() != count * win)
        throw ShapeError("predict: expected " + std::to_string(count) + " windows of " + std::to_string(win) +
                         " values, got " + std::to_string(windows.size()));
    std::vector<float> out(count * image);
    constexpr std::size_t kChunk = 64;
    const std::size_t per = spec.input_shape(1).size();
    for (std::size_t lo = 0; lo < count; lo += kChunk) {
        const std::size_t n = std::min(kChunk, count - lo);
        Tensor<float> x(spec.input_shape(n));
        for (std::size_t i = 0; i < n; ++i)
            assemble_input<float>(spec, windows.subspan((lo + i) * win, win), x.ptr() + i * per);
        const Tensor<float> y = model.forward(x, false);
        for (std::size_t i = 0; i < n; ++i) std::ranges::copy(predicted_block(spec, y, i), out.begin() + (lo + i) * image);
    }
    return out;
}

std::vector<float> predict(Model<float> &model, std::span<const float> window) {
    return predict_batch(model, window, 1);
}

std::vector<std::vector<float>> rollout_batch(Model<float> &model, std::span<const float> windows,
                                              std::size_t count, std::size_t steps) {
    if (steps < 1) throw ArgumentError("rollout: steps must be >= 1");
    const ModelSpec &spec = model.spec();
    const std::size_t image = spec.rows * spec.cols;
    const std::size_t win = spec.m * image;
    std::vector<float> cur(windows.begin(), windows.end());
    std::vector<std::vector<float>> result;
    for (std::size_t s = 0; s < steps; ++s) {
        auto pred = predict_batch(model, cur, count);
        if (s + 1 < steps)
            for (std::size_t i = 0; i < count; ++i) {
                float *w = cur.data() + i * win;
                std::copy(w + image, w + win, w);
                std::copy_n(pred.data() + i * image, image, w + win - image);
            }
        result.push_back(std::move(pred));
    }
    return result;
}

std::vector<std::vector<float>> rollout(Model<float> &model, std::span<const float> window, std::size_t steps) {
    return rollout_batch(model, window, 1, steps);
}

#define CHANPRED_INSTANTIATE(T)                                                                                     \
    template class Model<T>;                                                                                       \
    template void assemble_input<T>(const ModelSpec &, std::span<const float>, T *);                              \
    template void assemble_target<T>(const ModelSpec &, const data::Sample &, T *);                               \
    template Tensor<T> input_batch<T>(const ModelSpec &, std::span<const data::Sample>, std::span<const std::size_t>); \
    template Tensor<T> target_batch<T>(const ModelSpec &, std::span<const data::Sample>, std::span<const std::size_t>); \
    template std::span<const T> predicted_block<T>(const ModelSpec &, const Tensor<T> &, std::size_t);

CHANPRED_INSTANTIATE(float)
CHANPRED_INSTANTIATE(double)

} // namespace chanpred::nn
