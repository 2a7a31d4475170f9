// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chanpred Authors

// Reference implementations shared by the unit tests and the acceptance
// binary. Nothing here calls the code paths it is used to check.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>
#include <string>
#include <vector>

#include "chanpred/nn/layers.hpp"
#include "chanpred/rng.hpp"

namespace chanpred::oracle {

using cplx = std::complex<double>;

template <typename T>
nn::Tensor<T> random_tensor(Rng &rng, nn::Shape s, double away_from_zero = 0.0) {
    nn::Tensor<T> t(s);
    for (std::size_t i = 0; i < t.size(); ++i) {
        double v;
        do v = rng.normal();
        while (std::abs(v) < away_from_zero);
        t[i] = static_cast<T>(v);
    }
    return t;
}

template <typename T>
void randomise(Rng &rng, std::span<T> v, double scale = 1.0) {
    for (T &x : v) x = static_cast<T>(scale * rng.normal());
}

// Stride 1: k3 p1; even s: k 2s p s/2; odd s: k s p0.
inline nn::ConvGeometry geometry_for(std::size_t sh, std::size_t sw) {
    auto axis = [](std::size_t s, std::size_t &k, std::size_t &p) {
        if (s == 1) {
            k = 3;
            p = 1;
        } else if (s % 2 == 0) {
            k = 2 * s;
            p = s / 2;
        } else {
            k = s;
            p = 0;
        }
    };
    nn::ConvGeometry g;
    g.sh = sh;
    g.sw = sw;
    axis(sh, g.kh, g.ph);
    axis(sw, g.kw, g.pw);
    return g;
}

// Direct nested-loop cross-correlation, independent of the im2col path.
inline nn::Tensor<double> direct_conv(const nn::Tensor<double> &x, const std::vector<double> &w,
                                      const std::vector<double> &b, std::size_t co, const nn::ConvGeometry &g) {
    const nn::Shape s = x.shape();
    const std::size_t ho = (s.h + 2 * g.ph - g.kh) / g.sh + 1;
    const std::size_t wo = (s.w + 2 * g.pw - g.kw) / g.sw + 1;
    nn::Tensor<double> y({s.n, co, ho, wo});
    for (std::size_t n = 0; n < s.n; ++n)
        for (std::size_t o = 0; o < co; ++o)
            for (std::size_t i = 0; i < ho; ++i)
                for (std::size_t j = 0; j < wo; ++j) {
                    double acc = b.empty() ? 0.0 : b[o];
                    for (std::size_t c = 0; c < s.c; ++c)
                        for (std::size_t u = 0; u < g.kh; ++u)
                            for (std::size_t v = 0; v < g.kw; ++v) {
                                const long r = static_cast<long>(i * g.sh + u) - static_cast<long>(g.ph);
                                const long q = static_cast<long>(j * g.sw + v) - static_cast<long>(g.pw);
                                if (r < 0 || q < 0 || r >= static_cast<long>(s.h) || q >= static_cast<long>(s.w))
                                    continue;
                                acc += w[((o * s.c + c) * g.kh + u) * g.kw + v] *
                                       x(n, c, static_cast<std::size_t>(r), static_cast<std::size_t>(q));
                            }
                    y(n, o, i, j) = acc;
                }
    return y;
}

// Direct scatter form of the transposed convolution.
inline nn::Tensor<double> direct_tconv(const nn::Tensor<double> &x, const std::vector<double> &w, std::size_t co,
                                       const nn::ConvGeometry &g) {
    const nn::Shape s = x.shape();
    const std::size_t ho = (s.h - 1) * g.sh + g.kh - 2 * g.ph;
    const std::size_t wo = (s.w - 1) * g.sw + g.kw - 2 * g.pw;
    nn::Tensor<double> y({s.n, co, ho, wo});
    for (std::size_t n = 0; n < s.n; ++n)
        for (std::size_t c = 0; c < s.c; ++c)
            for (std::size_t i = 0; i < s.h; ++i)
                for (std::size_t j = 0; j < s.w; ++j)
                    for (std::size_t o = 0; o < co; ++o)
                        for (std::size_t u = 0; u < g.kh; ++u)
                            for (std::size_t v = 0; v < g.kw; ++v) {
                                const long r = static_cast<long>(i * g.sh + u) - static_cast<long>(g.ph);
                                const long q = static_cast<long>(j * g.sw + v) - static_cast<long>(g.pw);
                                if (r < 0 || q < 0 || r >= static_cast<long>(ho) || q >= static_cast<long>(wo))
                                    continue;
                                y(n, o, static_cast<std::size_t>(r), static_cast<std::size_t>(q)) +=
                                    w[((c * co + o) * g.kh + u) * g.kw + v] * x(n, c, i, j);
                            }
    return y;
}

struct GradientCheck {
    double max_error = 0.0; // |analytic - numeric| / max(1, |analytic|, |numeric|)
    std::size_t checked = 0;
    std::string worst;
};

// Central differences of L = sum(g * layer(x)) against dx and every parameter gradient.
inline GradientCheck gradient_check(nn::Layer<double> &layer, nn::Tensor<double> x, Rng &rng, double h = 1e-3) {
    const nn::Tensor<double> y0 = layer.forward(x, true);
    const nn::Tensor<double> g = random_tensor<double>(rng, y0.shape());
    for (auto &p : layer.parameters()) std::ranges::fill(p.grad, 0.0);
    const nn::Tensor<double> dx = layer.backward(g);

    GradientCheck out;
    if (dx.shape() != x.shape()) {
        out.max_error = INFINITY;
        out.worst = "dx shape " + dx.shape().str() + " != x shape " + x.shape().str();
        return out;
    }
    auto objective = [&]() {
        const nn::Tensor<double> y = layer.forward(x, true);
        double s = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) s += g[i] * y[i];
        return s;
    };
    auto probe = [&](double &slot, double analytic, const std::string &what) {
        const double keep = slot;
        slot = keep + h;
        const double up = objective();
        slot = keep - h;
        const double down = objective();
        slot = keep;
        const double numeric = (up - down) / (2 * h);
        const double err =
            std::abs(analytic - numeric) / std::max({1.0, std::abs(analytic), std::abs(numeric)});
        ++out.checked;
        if (!(err <= out.max_error)) {
            out.max_error = err;
            std::ostringstream s;
            s << what << " analytic " << analytic << " numeric " << numeric;
            out.worst = s.str();
        }
    };
    for (std::size_t i = 0; i < x.size(); ++i) probe(x[i], dx[i], "input " + std::to_string(i));
    std::size_t k = 0;
    for (auto &p : layer.parameters()) {
        for (std::size_t i = 0; i < p.value.size(); ++i)
            probe(p.value[i], p.grad[i], "parameter block " + std::to_string(k) + " index " + std::to_string(i));
        ++k;
    }
    return out;
}

// |<conv(x), y> - <x, tconv(y)>| relative to sum |terms|, for one random float case.
inline double adjoint_gap(Rng &rng) {
    const std::size_t sh = 1 + rng.index(4), sw = 1 + rng.index(4);
    const auto g = geometry_for(sh, sw);
    const std::size_t ci = 1 + rng.index(4), co = 1 + rng.index(4);
    const nn::Shape xs{1 + rng.index(2), ci, sh * (1 + rng.index(4)), sw * (1 + rng.index(4))};
    const nn::Shape ys{xs.n, co, xs.h / sh, xs.w / sw};
    const auto x = random_tensor<float>(rng, xs);
    const auto y = random_tensor<float>(rng, ys);
    std::vector<float> w(co * ci * g.kh * g.kw);
    randomise<float>(rng, std::span<float>(w));
    const auto cx = nn::conv2d_forward<float>(x, w, {}, co, g);
    const auto ty = nn::tconv2d_forward<float>(y, w, {}, ci, g);
    if (cx.shape() != ys || ty.shape() != xs) return INFINITY;
    double lhs = 0.0, rhs = 0.0, mag = 0.0;
    for (std::size_t i = 0; i < cx.size(); ++i) {
        lhs += static_cast<double>(cx[i]) * y[i];
        mag += std::abs(static_cast<double>(cx[i]) * y[i]);
    }
    for (std::size_t i = 0; i < ty.size(); ++i) rhs += static_cast<double>(x[i]) * ty[i];
    return std::abs(lhs - rhs) / std::max(1.0, mag);
}

inline std::vector<cplx> white(Rng &rng, std::size_t n) {
    std::vector<cplx> x(n);
    for (auto &v : x) v = rng.complex_normal(1.0);
    return x;
}

// x_k = sum a_i x_{k-i} + e_k, started from zeros and run past a burn-in.
inline std::vector<cplx> ar_process(Rng &rng, const std::vector<cplx> &a, std::size_t n, double noise) {
    const std::size_t burn = 200;
    std::vector<cplx> x(n + burn, cplx{});
    for (std::size_t k = 0; k < x.size(); ++k) {
        cplx v = noise > 0 ? rng.complex_normal(noise) : cplx{};
        for (std::size_t i = 0; i < a.size() && i < k; ++i) v += a[i] * x[k - 1 - i];
        x[k] = v;
    }
    return {x.begin() + static_cast<std::ptrdiff_t>(burn), x.end()};
}

// Dense solve of sum_i a_i gamma(j - i) = gamma(j), j = 1..p.
inline Eigen::VectorXcd dense_yule_walker(const std::vector<cplx> &gamma, std::size_t p) {
    const auto n = static_cast<Eigen::Index>(p);
    Eigen::MatrixXcd m(n, n);
    Eigen::VectorXcd rhs(n);
    auto g = [&](long l) {
        return l >= 0 ? gamma[static_cast<std::size_t>(l)] : std::conj(gamma[static_cast<std::size_t>(-l)]);
    };
    for (Eigen::Index j = 0; j < n; ++j) {
        rhs(j) = gamma[static_cast<std::size_t>(j + 1)];
        for (Eigen::Index i = 0; i < n; ++i) m(j, i) = g(static_cast<long>(j - i));
    }
    return m.fullPivLu().solve(rhs);
}

// Autocovariance lags 0..2 of a real AR(2) process from its forward identities.
inline std::vector<cplx> ar2_autocovariance(double a1, double a2, double sigma2) {
    const double rho1 = a1 / (1.0 - a2);
    const double rho2 = a1 * rho1 + a2;
    const double g0 = sigma2 / (1.0 - a1 * rho1 - a2 * rho2);
    return {{g0, 0}, {g0 * rho1, 0}, {g0 * rho2, 0}};
}

// sum_i a_i x_{N-1-i}
template <typename Coefficients>
cplx ar_recursion(const std::vector<cplx> &x, const Coefficients &a) {
    cplx v{};
    for (std::size_t i = 0; i < a.size(); ++i) v += a[i] * x[x.size() - 1 - i];
    return v;
}

} // namespace chanpred::oracle
