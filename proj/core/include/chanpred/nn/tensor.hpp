// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chanpred Authors

#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "chanpred/error.hpp"

namespace chanpred::nn {

/// NCHW extent. Single images use n = 1.
struct Shape {
    std::size_t n = 1;
    std::size_t c = 1;
    std::size_t h = 1;
    std::size_t w = 1;

    std::size_t size() const { return n * c * h * w; }
    std::size_t plane() const { return h * w; }
    std::string str() const {
        return "(" + std::to_string(n) + ", " + std::to_string(c) + ", " + std::to_string(h) + ", " +
               std::to_string(w) + ")";
    }
    friend bool operator==(const Shape &, const Shape &) = default;
};

template <typename T>
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, T value = T(0)) : shape_(shape), data_(shape.size(), value) {}
    Tensor(Shape shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
        if (data_.size() != shape_.size())
            throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                             shape_.str());
    }

    const Shape &shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::span<T> data() { return data_; }
    std::span<const T> data() const { return data_; }
    T *ptr() { return data_.data(); }
    const T *ptr() const { return data_.data(); }

    T &operator[](std::size_t i) { return data_[i]; }
    const T &operator[](std::size_t i) const { return data_[i]; }

    T &operator()(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
        return data_[((n * shape_.c + c) * shape_.h + h) * shape_.w + w];
    }
    const T &operator()(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
        return data_[((n * shape_.c + c) * shape_.h + h) * shape_.w + w];
    }

    std::span<T> plane(std::size_t n, std::size_t c) {
        return {data_.data() + (n * shape_.c + c) * shape_.plane(), shape_.plane()};
    }
    std::span<const T> plane(std::size_t n, std::size_t c) const {
        return {data_.data() + (n * shape_.c + c) * shape_.plane(), shape_.plane()};
    }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out(shape_);
        for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
        return out;
    }

    friend bool operator==(const Tensor &, const Tensor &) = default;

private:
    Shape shape_{0, 0, 0, 0};
    std::vector<T> data_;
};

inline void require_same_shape(const Shape &a, const Shape &b, const char *what) {
    if (a != b) throw ShapeError(std::string(what) + ": shape " + a.str() + " vs " + b.str());
}

} // namespace chanpred::nn
