// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chanpred Authors

#include "chanpred/nn/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "chanpred/rng.hpp"

namespace chanpred::nn {

template <typename T>
LossResult<T> mae_loss(const Tensor<T> &pred, const Tensor<T> &target) {
    require_same_shape(pred.shape(), target.shape(), "mae_loss");
    if (pred.empty()) throw ShapeError("mae_loss: empty tensors");
    LossResult<T> r;
    r.grad = Tensor<T>(pred.shape());
    const T inv = T(1) / static_cast<T>(pred.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const T d = pred[i] - target[i];
        sum += std::abs(static_cast<double>(d));
        r.grad[i] = d > T(0) ? inv : (d < T(0) ? -inv : T(0));
    }
    r.loss = sum / static_cast<double>(pred.size());
    return r;
}

template <typename T>
void Adam<T>::step(std::span<const ParamRef<T>> params) {
    std::size_t total = 0;
    for (const auto &p : params) {
        if (p.value.size() != p.grad.size()) throw ShapeError("adam: parameter/gradient length mismatch");
        total += p.value.size();
    }
    if (m_.empty() && v_.empty()) {
        m_.assign(total, T(0));
        v_.assign(total, T(0));
    }
    if (m_.size() != total || v_.size() != total)
        throw ShapeError("adam: optimizer state holds " + std::to_string(m_.size()) + " values, model has " +
                         std::to_string(total));
    ++steps_;
    const double bc1 = 1.0 - std::pow(static_cast<double>(config_.beta1), static_cast<double>(steps_));
    const double bc2 = 1.0 - std::pow(static_cast<double>(config_.beta2), static_cast<double>(steps_));
    const T lr = static_cast<T>(config_.learning_rate * std::sqrt(bc2) / bc1);
    const T eps = static_cast<T>(config_.epsilon * std::sqrt(bc2));
    const T b1 = config_.beta1, b2 = config_.beta2;
    std::size_t off = 0;
    for (const auto &p : params) {
        T *m = m_.data() + off;
        T *v = v_.data() + off;
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const T g = p.grad[i];
            m[i] = b1 * m[i] + (T(1) - b1) * g;
            v[i] = b2 * v[i] + (T(1) - b2) * g * g;
            p.value[i] -= lr * m[i] / (std::sqrt(v[i]) + eps);
        }
        off += p.value.size();
    }
}

template <typename T>
void Adam<T>::restore(const AdamConfig &config, std::uint64_t steps, std::vector<T> m, std::vector<T> v) {
    if (m.size() != v.size()) throw ShapeError("adam: moment vectors differ in length");
    config_ = config;
    steps_ = steps;
    m_ = std::move(m);
    v_ = std::move(v);
}

std::string TrainingReport::to_csv() const {
    std::string out = "epoch,train_l1,val_l1\n";
    char buf[96];
    for (const auto &e : epochs) {
        std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g\n", e.epoch, e.train_l1, e.val_l1);
        out += buf;
    }
    return out;
}

void TrainingReport::write_csv(const std::filesystem::path &path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    out << to_csv();
}

double evaluate_l1(Model<float> &model, std::span<const data::Sample> samples, std::size_t batch_size) {
    if (samples.empty()) return std::numeric_limits<double>::quiet_NaN();
    const ModelSpec &spec = model.spec();
    batch_size = std::max<std::size_t>(1, batch_size);
    double sum = 0.0;
    std::vector<std::size_t> index;
    for (std::size_t lo = 0; lo < samples.size(); lo += batch_size) {
        const std::size_t n = std::min(batch_size, samples.size() - lo);
        index.resize(n);
        std::iota(index.begin(), index.end(), lo);
        const Tensor<float> x = input_batch<float>(spec, samples, index);
        const Tensor<float> y = model.forward(x, false);
        for (std::size_t i = 0; i < n; ++i) {
            const auto pred = predicted_block(spec, y, i);
            const auto truth = samples[lo + i].target();
            for (std::size_t k = 0; k < pred.size(); ++k) sum += std::abs(static_cast<double>(pred[k]) - truth[k]);
        }
    }
    return sum / static_cast<double>(samples.size() * spec.rows * spec.cols);
}

TrainingReport train(Model<float> &model, Adam<float> &optimizer, std::span<const data::Sample> train_set,
                     std::span<const data::Sample> val_set, const TrainConfig &config) {
    if (train_set.empty()) throw TrainingError(0, "empty training set");
    if (config.batch_size < 2) throw ArgumentError("train: batch_size must be >= 2 (batch normalisation)");
    if (train_set.size() < 2) throw TrainingError(0, "training set needs at least 2 samples");
    const ModelSpec &spec = model.spec();
    for (const auto &s : train_set) check_sample(spec, s);
    for (const auto &s : val_set) check_sample(spec, s);

    model.set_threads(config.threads);
    model.reseed_dropout(config.seed ^ 0xd1b54a32d192ed03ULL);
    Rng shuffle(config.seed);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    TrainingReport report;
    auto params = model.parameters();
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.index(i)]);
        double sum = 0.0;
        std::size_t seen = 0;
        for (std::size_t lo = 0; lo < order.size(); lo += config.batch_size) {
            const std::size_t n = std::min(config.batch_size, order.size() - lo);
            if (n < 2) break;
            const std::span<const std::size_t> idx(order.data() + lo, n);
            const Tensor<float> x = input_batch<float>(spec, train_set, idx);
            const Tensor<float> y = target_batch<float>(spec, train_set, idx);
            model.zero_grad();
            const Tensor<float> pred = model.forward(x, true);
            auto loss = mae_loss(pred, y);
            if (!std::isfinite(loss.loss)) throw TrainingError(epoch, "non-finite training loss");
            model.backward(loss.grad);
            optimizer.step(params);
            sum += loss.loss * static_cast<double>(n);
            seen += n;
        }
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_l1 = sum / static_cast<double>(seen);
        rec.val_l1 = evaluate_l1(model, val_set);
        if (!val_set.empty() && !std::isfinite(rec.val_l1))
            throw TrainingError(epoch, "non-finite validation loss");
        report.epochs.push_back(rec);
        if (config.on_epoch) config.on_epoch(rec);
    }
    return report;
}

template LossResult<float> mae_loss<float>(const Tensor<float> &, const Tensor<float> &);
template LossResult<double> mae_loss<double>(const Tensor<double> &, const Tensor<double> &);
template class Adam<float>;
template class Adam<double>;

} // namespace chanpred::nn
