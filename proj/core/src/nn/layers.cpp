// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chanpred Authors

#include "chanpred/nn/layers.hpp"

#include <cmath>

#include "chanpred/parallel.hpp"

namespace chanpred::nn {

const char *to_string(LayerKind kind) {
    switch (kind) {
    case LayerKind::conv: return "conv";
    case LayerKind::transposed_conv: return "transposed_conv";
    case LayerKind::batch_norm: return "batch_norm";
    case LayerKind::leaky_relu: return "leaky_relu";
    case LayerKind::relu: return "relu";
    case LayerKind::tanh: return "tanh";
    case LayerKind::dropout: return "dropout";
    case LayerKind::concat_skip: return "concat_skip";
    }
    return "?";
}

std::size_t ConvGeometry::conv_out(std::size_t in, bool rows) const {
    const std::size_t k = rows ? kh : kw, s = rows ? sh : sw, p = rows ? ph : pw;
    if (s == 0 || k == 0) throw ShapeError("conv: kernel and stride must be >= 1");
    if (in + 2 * p < k)
        throw ShapeError("conv: kernel " + std::to_string(k) + " larger than padded input " +
                         std::to_string(in + 2 * p));
    return (in + 2 * p - k) / s + 1;
}

std::size_t ConvGeometry::tconv_out(std::size_t in, bool rows) const {
    const std::size_t k = rows ? kh : kw, s = rows ? sh : sw, p = rows ? ph : pw;
    if (in == 0) throw ShapeError("transposed conv: empty input");
    const std::size_t full = (in - 1) * s + k;
    if (full <= 2 * p) throw ShapeError("transposed conv: padding removes the whole output");
    return full - 2 * p;
}

namespace {

// col[(c * kh + i) * kw + j][n * P + oh * Wo + ow] = x[n][c][oh*sh - ph + i][ow*sw - pw + j]
template <typename T>
void im2col(const Tensor<T> &x, const ConvGeometry &g, std::size_t ho, std::size_t wo, std::vector<T> &col) {
    const Shape s = x.shape();
    const std::size_t P = ho * wo;
    const std::size_t NQ = s.n * P;
    col.assign(s.c * g.kh * g.kw * NQ, T(0));
    for (std::size_t c = 0; c < s.c; ++c)
        for (std::size_t i = 0; i < g.kh; ++i)
            for (std::size_t j = 0; j < g.kw; ++j) {
                T *row = col.data() + ((c * g.kh + i) * g.kw + j) * NQ;
                for (std::size_t n = 0; n < s.n; ++n) {
                    const T *src = x.ptr() + (n * s.c + c) * s.plane();
                    for (std::size_t oh = 0; oh < ho; ++oh) {
                        const std::ptrdiff_t h = static_cast<std::ptrdiff_t>(oh * g.sh + i) -
                                                 static_cast<std::ptrdiff_t>(g.ph);
                        if (h < 0 || h >= static_cast<std::ptrdiff_t>(s.h)) continue;
                        T *dst = row + n * P + oh * wo;
                        for (std::size_t ow = 0; ow < wo; ++ow) {
                            const std::ptrdiff_t w = static_cast<std::ptrdiff_t>(ow * g.sw + j) -
                                                     static_cast<std::ptrdiff_t>(g.pw);
                            if (w >= 0 && w < static_cast<std::ptrdiff_t>(s.w)) dst[ow] = src[h * s.w + w];
                        }
                    }
                }
            }
}

// Adjoint of im2col: accumulates col entries back into out (shape preset).
template <typename T>
void col2im(const std::vector<T> &col, const ConvGeometry &g, std::size_t ho, std::size_t wo, Tensor<T> &out) {
    const Shape s = out.shape();
    const std::size_t P = ho * wo;
    const std::size_t NQ = s.n * P;
    for (std::size_t c = 0; c < s.c; ++c)
        for (std::size_t i = 0; i < g.kh; ++i)
            for (std::size_t j = 0; j < g.kw; ++j) {
                const T *row = col.data() + ((c * g.kh + i) * g.kw + j) * NQ;
                for (std::size_t n = 0; n < s.n; ++n) {
                    T *dst = out.ptr() + (n * s.c + c) * s.plane();
                    for (std::size_t oh = 0; oh < ho; ++oh) {
                        const std::ptrdiff_t h = static_cast<std::ptrdiff_t>(oh * g.sh + i) -
                                                 static_cast<std::ptrdiff_t>(g.ph);
                        if (h < 0 || h >= static_cast<std::ptrdiff_t>(s.h)) continue;
                        const T *src = row + n * P + oh * wo;
                        for (std::size_t ow = 0; ow < wo; ++ow) {
                            const std::ptrdiff_t w = static_cast<std::ptrdiff_t>(ow * g.sw + j) -
                                                     static_cast<std::ptrdiff_t>(g.pw);
                            if (w >= 0 && w < static_cast<std::ptrdiff_t>(s.w)) dst[h * s.w + w] += src[ow];
                        }
                    }
                }
            }
}

// NCHW -> channel-major [C][N * H * W]
template <typename T>
std::vector<T> to_channel_major(const Tensor<T> &x) {
    const Shape s = x.shape();
    const std::size_t P = s.plane();
    std::vector<T> out(x.size());
    for (std::size_t n = 0; n < s.n; ++n)
        for (std::size_t c = 0; c < s.c; ++c) std::copy_n(x.ptr() + (n * s.c + c) * P, P, out.data() + (c * s.n + n) * P);
    return out;
}

template <typename T>
Tensor<T> from_channel_major(const std::vector<T> &m, Shape s) {
    Tensor<T> out(s);
    const std::size_t P = s.plane();
    for (std::size_t n = 0; n < s.n; ++n)
        for (std::size_t c = 0; c < s.c; ++c) std::copy_n(m.data() + (c * s.n + n) * P, P, out.ptr() + (n * s.c + c) * P);
    return out;
}

// C[M][N] += A[M][K] * B[K][N]; rows of C split across threads.
template <typename T>
void gemm_nn(const T *A, const T *B, T *C, std::size_t M, std::size_t K, std::size_t N, std::size_t threads) {
    parallel_for(M, threads, [&](std::size_t i) {
        T *c = C + i * N;
        for (std::size_t k = 0; k < K; ++k) {
            const T a = A[i * K + k];
            if (a == T(0)) continue;
            const T *b = B + k * N;
            for (std::size_t j = 0; j < N; ++j) c[j] += a * b[j];
        }
    });
}

// C[K][N] += A[M][K]^T * B[M][N]; rows of C split across threads, i summed in order.
template <typename T>
void gemm_tn(const T *A, const T *B, T *C, std::size_t M, std::size_t K, std::size_t N, std::size_t threads) {
    parallel_for(K, threads, [&](std::size_t k) {
        T *c = C + k * N;
        for (std::size_t i = 0; i < M; ++i) {
            const T a = A[i * K + k];
            if (a == T(0)) continue;
            const T *b = B + i * N;
            for (std::size_t j = 0; j < N; ++j) c[j] += a * b[j];
        }
    });
}

// C[M][K] += A[M][N] * B[K][N]^T, computed against the transposed Bt[N][K].
template <typename T>
void gemm_nt(const T *A, const T *Bt, T *C, std::size_t M, std::size_t N, std::size_t K, std::size_t threads) {
    parallel_for(M, threads, [&](std::size_t i) {
        T *c = C + i * K;
        for (std::size_t q = 0; q < N; ++q) {
            const T a = A[i * N + q];
            if (a == T(0)) continue;
            const T *b = Bt + q * K;
            for (std::size_t k = 0; k < K; ++k) c[k] += a * b[k];
        }
    });
}

template <typename T>
std::vector<T> transpose(const std::vector<T> &m, std::size_t rows, std::size_t cols) {
    std::vector<T> out(m.size());
    constexpr std::size_t B = 32;
    for (std::size_t r0 = 0; r0 < rows; r0 += B)
        for (std::size_t c0 = 0; c0 < cols; c0 += B)
            for (std::size_t r = r0; r < std::min(rows, r0 + B); ++r)
                for (std::size_t c = c0; c < std::min(cols, c0 + B); ++c) out[c * rows + r] = m[r * cols + c];
    return out;
}

void check_weight(std::size_t got, std::size_t expected, const char *what) {
    if (got != expected)
        throw ShapeError(std::string(what) + ": weight has " + std::to_string(got) + " values, expected " +
                         std::to_string(expected));
}

} // namespace

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T> &x, std::span<const T> weight, std::span<const T> bias,
                         std::size_t out_channels, const ConvGeometry &g, std::size_t threads) {
    const Shape s = x.shape();
    const std::size_t K = s.c * g.kh * g.kw;
    check_weight(weight.size(), out_channels * K, "conv2d");
    if (!bias.empty() && bias.size() != out_channels) throw ShapeError("conv2d: bias length mismatch");
    const std::size_t ho = g.conv_out(s.h, true), wo = g.conv_out(s.w, false);
    const std::size_t NQ = s.n * ho * wo;

    std::vector<T> col;
    im2col(x, g, ho, wo, col);
    std::vector<T> y(out_channels * NQ, T(0));
    if (!bias.empty())
        for (std::size_t o = 0; o < out_channels; ++o) std::fill_n(y.data() + o * NQ, NQ, bias[o]);
    gemm_nn(weight.data(), col.data(), y.data(), out_channels, K, NQ, threads);
    return from_channel_major(y, Shape{s.n, out_channels, ho, wo});
}

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T> &x, const Tensor<T> &dy, std::span<const T> weight,
                             const ConvGeometry &g, std::size_t threads) {
    const Shape s = x.shape();
    const Shape ys = dy.shape();
    const std::size_t K = s.c * g.kh * g.kw;
    const std::size_t ho = g.conv_out(s.h, true), wo = g.conv_out(s.w, false);
    if (ys.n != s.n || ys.h != ho || ys.w != wo) throw ShapeError("conv2d_backward: dy shape " + ys.str());
    const std::size_t co = ys.c;
    check_weight(weight.size(), co * K, "conv2d_backward");
    const std::size_t NQ = s.n * ho * wo;

    std::vector<T> col;
    im2col(x, g, ho, wo, col);
    const std::vector<T> dym = to_channel_major(dy);

    ConvGrads<T> out;
    out.dbias.assign(co, T(0));
    for (std::size_t o = 0; o < co; ++o)
        for (std::size_t q = 0; q < NQ; ++q) out.dbias[o] += dym[o * NQ + q];
    out.dweight.assign(co * K, T(0));
    const std::vector<T> colt = transpose(col, K, NQ);
    gemm_nt(dym.data(), colt.data(), out.dweight.data(), co, NQ, K, threads);

    std::vector<T> dcol(K * NQ, T(0));
    gemm_tn(weight.data(), dym.data(), dcol.data(), co, K, NQ, threads);
    out.dx = Tensor<T>(s);
    col2im(dcol, g, ho, wo, out.dx);
    return out;
}

template <typename T>
Tensor<T> tconv2d_forward(const Tensor<T> &x, std::span<const T> weight, std::span<const T> bias,
                          std::size_t out_channels, const ConvGeometry &g, std::size_t threads) {
    const Shape s = x.shape();
    const std::size_t K = out_channels * g.kh * g.kw;
    check_weight(weight.size(), s.c * K, "tconv2d");
    if (!bias.empty() && bias.size() != out_channels) throw ShapeError("tconv2d: bias length mismatch");
    const Shape os{s.n, out_channels, g.tconv_out(s.h, true), g.tconv_out(s.w, false)};
    if (g.conv_out(os.h, true) != s.h || g.conv_out(os.w, false) != s.w)
        throw ShapeError("tconv2d: geometry does not invert to input " + s.str());
    const std::size_t NQ = s.n * s.plane();

    const std::vector<T> xm = to_channel_major(x);
    std::vector<T> col(K * NQ, T(0));
    gemm_tn(weight.data(), xm.data(), col.data(), s.c, K, NQ, threads);
    Tensor<T> y(os);
    col2im(col, g, s.h, s.w, y);
    if (!bias.empty())
        for (std::size_t n = 0; n < os.n; ++n)
            for (std::size_t o = 0; o < out_channels; ++o)
                for (T &v : y.plane(n, o)) v += bias[o];
    return y;
}

template <typename T>
ConvGrads<T> tconv2d_backward(const Tensor<T> &x, const Tensor<T> &dy, std::span<const T> weight,
                              const ConvGeometry &g, std::size_t threads) {
    const Shape s = x.shape();
    const Shape ys = dy.shape();
    const std::size_t co = ys.c;
    const std::size_t K = co * g.kh * g.kw;
    check_weight(weight.size(), s.c * K, "tconv2d_backward");
    if (ys.n != s.n || ys.h != g.tconv_out(s.h, true) || ys.w != g.tconv_out(s.w, false))
        throw ShapeError("tconv2d_backward: dy shape " + ys.str());
    const std::size_t NQ = s.n * s.plane();

    std::vector<T> col;
    im2col(dy, g, s.h, s.w, col);
    const std::vector<T> xm = to_channel_major(x);

    ConvGrads<T> out;
    out.dbias.assign(co, T(0));
    for (std::size_t n = 0; n < ys.n; ++n)
        for (std::size_t o = 0; o < co; ++o)
            for (T v : dy.plane(n, o)) out.dbias[o] += v;
    out.dweight.assign(s.c * K, T(0));
    const std::vector<T> colt = transpose(col, K, NQ);
    gemm_nt(xm.data(), colt.data(), out.dweight.data(), s.c, NQ, K, threads);

    std::vector<T> dxm(s.c * NQ, T(0));
    gemm_nn(weight.data(), col.data(), dxm.data(), s.c, K, NQ, threads);
    out.dx = from_channel_major(dxm, s);
    return out;
}

// ---- Conv2d ----

template <typename T>
Conv2d<T>::Conv2d(std::size_t in_channels, std::size_t out_channels, ConvGeometry geometry)
    : in_(in_channels), out_(out_channels), geometry_(geometry),
      weight_(in_channels * out_channels * geometry.kh * geometry.kw, T(0)), bias_(out_channels, T(0)),
      dweight_(weight_.size(), T(0)), dbias_(out_channels, T(0)) {
    if (in_ == 0 || out_ == 0) throw ShapeError("conv: channel counts must be >= 1");
}

template <typename T>
Shape Conv2d<T>::output_shape(const Shape &in) const {
    if (in.c != in_)
        throw ShapeError("conv: expected " + std::to_string(in_) + " input channels, got " + std::to_string(in.c));
    return {in.n, out_, geometry_.conv_out(in.h, true), geometry_.conv_out(in.w, false)};
}

template <typename T>
Tensor<T> Conv2d<T>::forward(const Tensor<T> &x, bool training) {
    output_shape(x.shape());
    if (training) input_ = x;
    return conv2d_forward<T>(x, weight_, bias_, out_, geometry_, threads_);
}

template <typename T>
Tensor<T> Conv2d<T>::backward(const Tensor<T> &dy) {
    if (input_.empty()) throw ShapeError("conv: backward without a training forward pass");
    auto g = conv2d_backward<T>(input_, dy, weight_, geometry_, threads_);
    for (std::size_t i = 0; i < dweight_.size(); ++i) dweight_[i] += g.dweight[i];
    for (std::size_t i = 0; i < dbias_.size(); ++i) dbias_[i] += g.dbias[i];
    return std::move(g.dx);
}

template <typename T>
std::vector<ParamRef<T>> Conv2d<T>::parameters() {
    return {{weight_, dweight_}, {bias_, dbias_}};
}

// ---- TransposedConv2d ----

template <typename T>
TransposedConv2d<T>::TransposedConv2d(std::size_t in_channels, std::size_t out_channels, ConvGeometry geometry)
    : in_(in_channels), out_(out_channels), geometry_(geometry),
      weight_(in_channels * out_channels * geometry.kh * geometry.kw, T(0)), bias_(out_channels, T(0)),
      dweight_(weight_.size(), T(0)), dbias_(out_channels, T(0)) {
    if (in_ == 0 || out_ == 0) throw ShapeError("transposed conv: channel counts must be >= 1");
}

template <typename T>
Shape TransposedConv2d<T>::output_shape(const Shape &in) const {
    if (in.c != in_)
        throw ShapeError("transposed conv: expected " + std::to_string(in_) + " input channels, got " +
                         std::to_string(in.c));
    return {in.n, out_, geometry_.tconv_out(in.h, true), geometry_.tconv_out(in.w, false)};
}

template <typename T>
Tensor<T> TransposedConv2d<T>::forward(const Tensor<T> &x, bool training) {
    output_shape(x.shape());
    if (training) input_ = x;
    return tconv2d_forward<T>(x, weight_, bias_, out_, geometry_, threads_);
}

template <typename T>
Tensor<T> TransposedConv2d<T>::backward(const Tensor<T> &dy) {
    if (input_.empty()) throw ShapeError("transposed conv: backward without a training forward pass");
    auto g = tconv2d_backward<T>(input_, dy, weight_, geometry_, threads_);
    for (std::size_t i = 0; i < dweight_.size(); ++i) dweight_[i] += g.dweight[i];
    for (std::size_t i = 0; i < dbias_.size(); ++i) dbias_[i] += g.dbias[i];
    return std::move(g.dx);
}

template <typename T>
std::vector<ParamRef<T>> TransposedConv2d<T>::parameters() {
    return {{weight_, dweight_}, {bias_, dbias_}};
}

// ---- BatchNorm2d ----

template <typename T>
BatchNorm2d<T>::BatchNorm2d(std::size_t channels, T epsilon, T momentum)
    : channels_(channels), epsilon_(epsilon), momentum_(momentum), gamma_(channels, T(1)), beta_(channels, T(0)),
      dgamma_(channels, T(0)), dbeta_(channels, T(0)), running_mean_(channels, T(0)), running_var_(channels, T(1)) {}

template <typename T>
Tensor<T> BatchNorm2d<T>::forward(const Tensor<T> &x, bool training) {
    const Shape s = x.shape();
    if (s.c != channels_)
        throw ShapeError("batch_norm: expected " + std::to_string(channels_) + " channels, got " + std::to_string(s.c));
    Tensor<T> y(s);
    last_training_ = training;
    if (!training) {
        for (std::size_t c = 0; c < s.c; ++c) {
            const T inv = T(1) / std::sqrt(running_var_[c] + epsilon_);
            const T a = gamma_[c] * inv;
            const T b = beta_[c] - running_mean_[c] * a;
            for (std::size_t n = 0; n < s.n; ++n) {
                auto src = x.plane(n, c);
                auto dst = y.plane(n, c);
                for (std::size_t i = 0; i < src.size(); ++i) dst[i] = a * src[i] + b;
            }
        }
        return y;
    }
    if (s.n < 2) throw ArgumentError("batch_norm: training mode needs a batch of at least 2");
    const std::size_t count = s.n * s.plane();
    xhat_ = Tensor<T>(s);
    inv_std_.assign(s.c, T(0));
    for (std::size_t c = 0; c < s.c; ++c) {
        double sum = 0.0;
        for (std::size_t n = 0; n < s.n; ++n)
            for (T v : x.plane(n, c)) sum += v;
        const double mean = sum / static_cast<double>(count);
        double sq = 0.0;
        for (std::size_t n = 0; n < s.n; ++n)
            for (T v : x.plane(n, c)) sq += (v - mean) * (v - mean);
        const double var = sq / static_cast<double>(count);
        const T inv = static_cast<T>(1.0 / std::sqrt(var + static_cast<double>(epsilon_)));
        inv_std_[c] = inv;
        const T mu = static_cast<T>(mean);
        for (std::size_t n = 0; n < s.n; ++n) {
            auto src = x.plane(n, c);
            auto xh = xhat_.plane(n, c);
            auto dst = y.plane(n, c);
            for (std::size_t i = 0; i < src.size(); ++i) {
                xh[i] = (src[i] - mu) * inv;
                dst[i] = gamma_[c] * xh[i] + beta_[c];
            }
        }
        const double unbiased = count > 1 ? sq / static_cast<double>(count - 1) : var;
        running_mean_[c] = momentum_ * running_mean_[c] + (T(1) - momentum_) * mu;
        running_var_[c] = momentum_ * running_var_[c] + (T(1) - momentum_) * static_cast<T>(unbiased);
    }
    return y;
}

template <typename T>
Tensor<T> BatchNorm2d<T>::backward(const Tensor<T> &dy) {
    if (!last_training_ || xhat_.empty()) throw ShapeError("batch_norm: backward without a training forward pass");
    const Shape s = dy.shape();
    require_same_shape(s, xhat_.shape(), "batch_norm backward");
    const std::size_t count = s.n * s.plane();
    Tensor<T> dx(s);
    for (std::size_t c = 0; c < s.c; ++c) {
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (std::size_t n = 0; n < s.n; ++n) {
            auto g = dy.plane(n, c);
            auto xh = xhat_.plane(n, c);
            for (std::size_t i = 0; i < g.size(); ++i) {
                sum_dy += g[i];
                sum_dy_xhat += g[i] * xh[i];
            }
        }
        dbeta_[c] += static_cast<T>(sum_dy);
        dgamma_[c] += static_cast<T>(sum_dy_xhat);
        // dx = gamma * inv_std * (dy - mean(dy) - xhat * mean(dy * xhat))
        const T mean_dy = static_cast<T>(sum_dy / static_cast<double>(count));
        const T mean_dy_xhat = static_cast<T>(sum_dy_xhat / static_cast<double>(count));
        const T scale = gamma_[c] * inv_std_[c];
        for (std::size_t n = 0; n < s.n; ++n) {
            auto g = dy.plane(n, c);
            auto xh = xhat_.plane(n, c);
            auto d = dx.plane(n, c);
            for (std::size_t i = 0; i < g.size(); ++i) d[i] = scale * (g[i] - mean_dy - xh[i] * mean_dy_xhat);
        }
    }
    return dx;
}

template <typename T>
std::vector<ParamRef<T>> BatchNorm2d<T>::parameters() {
    return {{gamma_, dgamma_}, {beta_, dbeta_}};
}

template <typename T>
std::vector<std::span<T>> BatchNorm2d<T>::buffers() {
    return {running_mean_, running_var_};
}

// ---- activations ----

template <typename T>
Tensor<T> LeakyReLU<T>::forward(const Tensor<T> &x, bool training) {
    if (training) input_ = x;
    Tensor<T> y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T(0) ? x[i] : slope_ * x[i];
    return y;
}

template <typename T>
Tensor<T> LeakyReLU<T>::backward(const Tensor<T> &dy) {
    require_same_shape(dy.shape(), input_.shape(), "leaky_relu backward");
    Tensor<T> dx(dy.shape());
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = input_[i] > T(0) ? dy[i] : slope_ * dy[i];
    return dx;
}

template <typename T>
Tensor<T> ReLU<T>::forward(const Tensor<T> &x, bool training) {
    if (training) input_ = x;
    Tensor<T> y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
    return y;
}

template <typename T>
Tensor<T> ReLU<T>::backward(const Tensor<T> &dy) {
    require_same_shape(dy.shape(), input_.shape(), "relu backward");
    Tensor<T> dx(dy.shape());
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = input_[i] > T(0) ? dy[i] : T(0);
    return dx;
}

template <typename T>
Tensor<T> Tanh<T>::forward(const Tensor<T> &x, bool training) {
    Tensor<T> y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
    if (training) output_ = y;
    return y;
}

template <typename T>
Tensor<T> Tanh<T>::backward(const Tensor<T> &dy) {
    require_same_shape(dy.shape(), output_.shape(), "tanh backward");
    Tensor<T> dx(dy.shape());
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = dy[i] * (T(1) - output_[i] * output_[i]);
    return dx;
}

template <typename T>
Dropout<T>::Dropout(T rate, std::uint64_t seed) : rate_(rate), rng_(seed) {
    if (!(rate >= T(0) && rate < T(1))) throw ArgumentError("dropout: rate must be in [0, 1)");
}

template <typename T>
Tensor<T> Dropout<T>::forward(const Tensor<T> &x, bool training) {
    last_training_ = training;
    if (!training || rate_ == T(0)) return x;
    if (!frozen_ || mask_.size() != x.size()) {
        mask_.resize(x.size());
        const T keep = T(1) / (T(1) - rate_);
        for (T &m : mask_) m = rng_.uniform() < static_cast<double>(rate_) ? T(0) : keep;
    }
    Tensor<T> y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * mask_[i];
    return y;
}

template <typename T>
Tensor<T> Dropout<T>::backward(const Tensor<T> &dy) {
    if (!last_training_ || rate_ == T(0)) return dy;
    if (mask_.size() != dy.size()) throw ShapeError("dropout backward: mask size mismatch");
    Tensor<T> dx(dy.shape());
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = dy[i] * mask_[i];
    return dx;
}

template <typename T>
Shape ConcatSkip<T>::output_shape(const Shape &in) const {
    return {in.n, in.c + skip_channels_, in.h, in.w};
}

template <typename T>
Tensor<T> ConcatSkip<T>::forward(const Tensor<T> &x, bool) {
    if (skip_ == nullptr) throw ShapeError("concat_skip: no skip tensor bound");
    const Shape a = x.shape(), b = skip_->shape();
    if (a.n != b.n || a.h != b.h || a.w != b.w || b.c != skip_channels_)
        throw ShapeError("concat_skip: cannot concatenate " + a.str() + " with " + b.str());
    main_channels_ = a.c;
    Tensor<T> y(output_shape(a));
    for (std::size_t n = 0; n < a.n; ++n) {
        for (std::size_t c = 0; c < a.c; ++c) std::ranges::copy(x.plane(n, c), y.plane(n, c).begin());
        for (std::size_t c = 0; c < b.c; ++c) std::ranges::copy(skip_->plane(n, c), y.plane(n, a.c + c).begin());
    }
    return y;
}

template <typename T>
Tensor<T> ConcatSkip<T>::backward(const Tensor<T> &dy) {
    const Shape s = dy.shape();
    Tensor<T> dx(Shape{s.n, main_channels_, s.h, s.w});
    skip_grad_ = Tensor<T>(Shape{s.n, skip_channels_, s.h, s.w});
    for (std::size_t n = 0; n < s.n; ++n) {
        for (std::size_t c = 0; c < main_channels_; ++c) std::ranges::copy(dy.plane(n, c), dx.plane(n, c).begin());
        for (std::size_t c = 0; c < skip_channels_; ++c)
            std::ranges::copy(dy.plane(n, main_channels_ + c), skip_grad_.plane(n, c).begin());
    }
    return dx;
}

#define CHANPRED_INSTANTIATE(T)                                                                                     \
    template Tensor<T> conv2d_forward<T>(const Tensor<T> &, std::span<const T>, std::span<const T>, std::size_t,   \
                                         const ConvGeometry &, std::size_t);                                      \
    template ConvGrads<T> conv2d_backward<T>(const Tensor<T> &, const Tensor<T> &, std::span<const T>,             \
                                             const ConvGeometry &, std::size_t);                                  \
    template Tensor<T> tconv2d_forward<T>(const Tensor<T> &, std::span<const T>, std::span<const T>, std::size_t,  \
                                          const ConvGeometry &, std::size_t);                                     \
    template ConvGrads<T> tconv2d_backward<T>(const Tensor<T> &, const Tensor<T> &, std::span<const T>,            \
                                              const ConvGeometry &, std::size_t);                                 \
    template class Conv2d<T>;                                                                                      \
    template class TransposedConv2d<T>;                                                                            \
    template class BatchNorm2d<T>;                                                                                 \
    template class LeakyReLU<T>;                                                                                   \
    template class ReLU<T>;                                                                                        \
    template class Tanh<T>;                                                                                        \
    template class Dropout<T>;                                                                                     \
    template class ConcatSkip<T>;

CHANPRED_INSTANTIATE(float)
CHANPRED_INSTANTIATE(double)

} // namespace chanpred::nn
