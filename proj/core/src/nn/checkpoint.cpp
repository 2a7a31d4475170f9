// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chanpred Authors

#include "chanpred/nn/checkpoint.hpp"

#include <bit>
#include <cstring>

namespace chanpred::nn {

Checkpoint make_checkpoint(Model<float> &model, const Adam<float> &optimizer) {
    Checkpoint c;
    c.spec = model.spec();
    c.seed = model.seed();
    for (const auto &p : model.parameters()) c.parameters.insert(c.parameters.end(), p.value.begin(), p.value.end());
    for (const auto &b : model.buffers()) c.buffers.insert(c.buffers.end(), b.begin(), b.end());
    c.adam = optimizer.config();
    c.steps = optimizer.steps();
    c.first_moment = optimizer.first_moment();
    c.second_moment = optimizer.second_moment();
    return c;
}

Model<float> restore_model(const Checkpoint &checkpoint) {
    Model<float> model(checkpoint.spec, checkpoint.seed);
    auto params = model.parameters();
    auto buffers = model.buffers();
    std::size_t np = 0, nb = 0;
    for (const auto &p : params) np += p.value.size();
    for (const auto &b : buffers) nb += b.size();
    if (np != checkpoint.parameters.size() || nb != checkpoint.buffers.size())
        throw FormatError("checkpoint holds " + std::to_string(checkpoint.parameters.size()) + " parameters and " +
                          std::to_string(checkpoint.buffers.size()) + " buffer values; the model needs " +
                          std::to_string(np) + " and " + std::to_string(nb));
    std::size_t off = 0;
    for (auto &p : params) {
        std::copy_n(checkpoint.parameters.begin() + off, p.value.size(), p.value.begin());
        off += p.value.size();
    }
    off = 0;
    for (auto &b : buffers) {
        std::copy_n(checkpoint.buffers.begin() + off, b.size(), b.begin());
        off += b.size();
    }
    return model;
}

Adam<float> restore_optimizer(const Checkpoint &checkpoint) {
    Adam<float> adam(checkpoint.adam);
    adam.restore(checkpoint.adam, checkpoint.steps, checkpoint.first_moment, checkpoint.second_moment);
    return adam;
}

namespace {

class Writer {
public:
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void floats(const std::vector<float> &v) {
        for (float x : v) f32(x);
    }
    std::vector<std::uint8_t> out;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint32_t u32(const char *field) {
        need(4, field);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }
    std::uint64_t u64(const char *field) {
        need(8, field);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return v;
    }
    float f32(const char *field) { return std::bit_cast<float>(u32(field)); }
    std::vector<float> floats(std::uint64_t n, const char *field) {
        if (n > (bytes_.size() - pos_) / 4) throw FormatError(std::string(field) + ": truncated");
        std::vector<float> v(n);
        for (auto &x : v) x = f32(field);
        return v;
    }
    void need(std::size_t n, const char *field) const {
        if (bytes_.size() - pos_ < n) throw FormatError(std::string(field) + ": truncated");
    }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

} // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint &c) {
    Writer w;
    w.out = {'C', 'H', 'M', 'D'};
    w.u32(kCheckpointVersion);
    w.u32(static_cast<std::uint32_t>(c.spec.variant));
    w.u32(static_cast<std::uint32_t>(c.spec.arch));
    w.u32(static_cast<std::uint32_t>(c.spec.depth));
    w.u32(static_cast<std::uint32_t>(c.spec.base_channels));
    w.u32(static_cast<std::uint32_t>(c.spec.m));
    w.u32(static_cast<std::uint32_t>(c.spec.rows));
    w.u32(static_cast<std::uint32_t>(c.spec.cols));
    w.u64(c.spec.parameter_budget);
    w.f32(c.spec.leaky_slope);
    w.f32(c.spec.dropout_rate);
    w.f32(c.spec.bn_epsilon);
    w.f32(c.spec.bn_momentum);
    w.u64(c.seed);
    w.u64(c.parameters.size());
    w.floats(c.parameters);
    w.u64(c.buffers.size());
    w.floats(c.buffers);
    w.u64(c.steps);
    w.f32(c.adam.learning_rate);
    w.f32(c.adam.beta1);
    w.f32(c.adam.beta2);
    w.f32(c.adam.epsilon);
    if (c.first_moment.size() != c.second_moment.size()) throw ShapeError("checkpoint: moment lengths differ");
    w.u64(c.first_moment.size());
    w.floats(c.first_moment);
    w.floats(c.second_moment);
    return std::move(w.out);
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 8) throw FormatError("header truncated");
    if (std::memcmp(bytes.data(), "CHMD", 4) != 0) throw FormatError("magic: expected \"CHMD\"");
    Reader r(bytes.subspan(4));
    const std::uint32_t version = r.u32("version");
    if (version != kCheckpointVersion)
        throw FormatError("version: expected " + std::to_string(kCheckpointVersion) + ", got " +
                          std::to_string(version));
    Checkpoint c;
    const std::uint32_t variant = r.u32("variant");
    const std::uint32_t arch = r.u32("arch");
    if (variant > 2) throw FormatError("variant: unknown code " + std::to_string(variant));
    if (arch > 1) throw FormatError("arch: unknown code " + std::to_string(arch));
    c.spec.variant = static_cast<Variant>(variant);
    c.spec.arch = static_cast<Arch>(arch);
    c.spec.depth = r.u32("depth");
    c.spec.base_channels = r.u32("base_channels");
    c.spec.m = r.u32("m");
    c.spec.rows = r.u32("T");
    c.spec.cols = r.u32("F");
    c.spec.parameter_budget = r.u64("parameter_budget");
    c.spec.leaky_slope = r.f32("leaky_slope");
    c.spec.dropout_rate = r.f32("dropout");
    c.spec.bn_epsilon = r.f32("bn_epsilon");
    c.spec.bn_momentum = r.f32("bn_momentum");
    c.seed = r.u64("seed");
    c.parameters = r.floats(r.u64("parameter count"), "parameters");
    c.buffers = r.floats(r.u64("buffer count"), "buffers");
    c.steps = r.u64("optimizer steps");
    c.adam.learning_rate = r.f32("learning_rate");
    c.adam.beta1 = r.f32("beta1");
    c.adam.beta2 = r.f32("beta2");
    c.adam.epsilon = r.f32("epsilon");
    const std::uint64_t n = r.u64("moment count");
    c.first_moment = r.floats(n, "first moments");
    c.second_moment = r.floats(n, "second moments");
    if (r.remaining() != 0) throw FormatError("payload: " + std::to_string(r.remaining()) + " unexpected trailing bytes");
    try {
        c.spec.validate();
    } catch (const ConfigError &e) {
        throw FormatError(std::string("model spec: ") + e.what());
    }
    return c;
}

void save_checkpoint(const Checkpoint &checkpoint, const std::filesystem::path &path) {
    data::write_file(path, encode_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path &path) { return decode_checkpoint(data::read_file(path)); }

} // namespace chanpred::nn
