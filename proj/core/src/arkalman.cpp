// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chanpred Authors

#include "chanpred/arkalman.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "chanpred/error.hpp"
#include "chanpred/parallel.hpp"

namespace chanpred::ark {

namespace {

constexpr double kUnitCircleTol = 1e-12;
constexpr double kPsdTol = 1e-9;

using MatrixXcd = Eigen::MatrixXcd;

} // namespace

cplx ARModel::predict_next(std::span<const cplx> history) const {
    if (history.size() < order()) throw ArgumentError("predict_next: history shorter than the AR order");
    cplx y{0.0, 0.0};
    for (std::size_t i = 0; i < order(); ++i) y += coefficients[i] * history[history.size() - 1 - i];
    return y;
}

std::vector<cplx> autocovariance(std::span<const cplx> series, std::size_t max_lag, bool remove_mean) {
    const std::size_t n = series.size();
    if (max_lag >= n)
        throw ArgumentError("autocovariance: max_lag " + std::to_string(max_lag) + " must be below length " +
                            std::to_string(n));
    cplx mean{0.0, 0.0};
    if (remove_mean) {
        for (const auto &x : series) mean += x;
        mean /= static_cast<double>(n);
    }
    std::vector<cplx> gamma(max_lag + 1);
    for (std::size_t l = 0; l <= max_lag; ++l) {
        cplx acc{0.0, 0.0};
        for (std::size_t k = 0; k + l < n; ++k) acc += (series[k + l] - mean) * std::conj(series[k] - mean);
        gamma[l] = acc / static_cast<double>(n);
    }
    gamma[0] = {gamma[0].real(), 0.0};
    return gamma;
}

ARModel yule_walker(std::span<const cplx> gamma, std::size_t order) {
    if (order < 1) throw ArgumentError("yule_walker: order must be >= 1");
    if (gamma.size() < order + 1)
        throw ArgumentError("yule_walker: need " + std::to_string(order + 1) + " autocovariance lags, got " +
                            std::to_string(gamma.size()));
    double err = gamma[0].real();
    if (!(err > 0) || !std::isfinite(err)) throw DegenerateError("yule_walker: gamma(0) must be > 0");

    ARModel model;
    std::vector<cplx> a;
    std::vector<cplx> next;
    a.reserve(order);
    for (std::size_t i = 1; i <= order; ++i) {
        cplx acc = gamma[i];
        for (std::size_t j = 1; j < i; ++j) acc -= a[j - 1] * gamma[i - j];
        const cplx k = acc / err;
        if (!(std::abs(k) < 1.0 - kUnitCircleTol))
            throw DegenerateError("yule_walker: reflection coefficient " + std::to_string(i) +
                                  " on or outside the unit circle (|k| = " + std::to_string(std::abs(k)) + ")");
        next.assign(i, cplx{});
        for (std::size_t j = 1; j < i; ++j) next[j - 1] = a[j - 1] - k * std::conj(a[i - j - 1]);
        next[i - 1] = k;
        a.swap(next);
        err *= 1.0 - std::norm(k);
        model.reflection.push_back(k);
    }
    model.coefficients = std::move(a);
    model.innovation_variance = err;
    model.stable = companion_stable(model.coefficients);
    return model;
}

bool companion_stable(std::span<const cplx> coefficients) {
    const auto p = static_cast<Eigen::Index>(coefficients.size());
    if (p == 0) return true;
    MatrixXcd companion = MatrixXcd::Zero(p, p);
    for (Eigen::Index j = 0; j < p; ++j) companion(0, j) = coefficients[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 1; i < p; ++i) companion(i, i - 1) = 1.0;
    Eigen::ComplexEigenSolver<MatrixXcd> solver(companion, false);
    for (Eigen::Index i = 0; i < p; ++i)
        if (!(std::abs(solver.eigenvalues()(i)) < 1.0)) return false;
    return true;
}

KalmanFilter::KalmanFilter(const ARModel &model, double measurement_noise)
    : order_(model.order()), coeffs_(model.coefficients), process_noise_(model.innovation_variance),
      measurement_noise_(measurement_noise), state_(order_), cov_(order_ * order_) {
    if (order_ < 1) throw ArgumentError("KalmanFilter: empty AR model");
    if (!(measurement_noise >= 0)) throw ArgumentError("KalmanFilter: measurement noise must be >= 0");
    if (!(process_noise_ >= 0)) throw ArgumentError("KalmanFilter: innovation variance must be >= 0");
}

void KalmanFilter::initialise(std::span<const cplx> oldest_first, double p0_scale) {
    if (oldest_first.size() != order_)
        throw ArgumentError("KalmanFilter::initialise: need exactly " + std::to_string(order_) + " observations");
    for (std::size_t i = 0; i < order_; ++i) state_[i] = oldest_first[order_ - 1 - i];
    std::fill(cov_.begin(), cov_.end(), cplx{});
    for (std::size_t i = 0; i < order_; ++i) cov_[i * order_ + i] = p0_scale;
}

void KalmanFilter::predict() {
    const std::size_t p = order_;
    // x <- A x: shift down, new head from the AR recursion.
    cplx head{0.0, 0.0};
    for (std::size_t i = 0; i < p; ++i) head += coeffs_[i] * state_[i];
    for (std::size_t i = p - 1; i > 0; --i) state_[i] = state_[i - 1];
    state_[0] = head;

    Eigen::Map<Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> P(cov_.data(), p, p);
    MatrixXcd A = MatrixXcd::Zero(p, p);
    for (std::size_t j = 0; j < p; ++j) A(0, j) = coeffs_[j];
    for (std::size_t i = 1; i < p; ++i) A(i, i - 1) = 1.0;
    MatrixXcd next = A * MatrixXcd(P) * A.adjoint();
    next(0, 0) += process_noise_;
    P = 0.5 * (next + next.adjoint());
}

void KalmanFilter::update(cplx measurement) {
    const auto p = static_cast<Eigen::Index>(order_);
    Eigen::Map<Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> P(cov_.data(), p, p);
    const double s = P(0, 0).real() + measurement_noise_;
    if (s <= 0.0) {
        // The filter already holds the head exactly; nothing to correct.
        if (check_) check_covariance();
        return;
    }
    const Eigen::VectorXcd gain = P.col(0) / s;
    const cplx innovation = measurement - state_[0];
    for (Eigen::Index i = 0; i < p; ++i) state_[static_cast<std::size_t>(i)] += gain(i) * innovation;

    // Joseph form keeps P Hermitian PSD under round-off.
    MatrixXcd ikh = MatrixXcd::Identity(p, p);
    ikh.col(0) -= gain;
    MatrixXcd next = ikh * MatrixXcd(P) * ikh.adjoint() + measurement_noise_ * (gain * gain.adjoint());
    P = 0.5 * (next + next.adjoint());
    if (check_) check_covariance();
}

double KalmanFilter::min_covariance_eigenvalue() const {
    const auto p = static_cast<Eigen::Index>(order_);
    Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> P(cov_.data(), p, p);
    Eigen::SelfAdjointEigenSolver<MatrixXcd> solver(MatrixXcd(P), Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

void KalmanFilter::check_covariance() const {
    const auto p = static_cast<Eigen::Index>(order_);
    Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> P(cov_.data(), p, p);
    const double scale = std::max(1.0, P.cwiseAbs().maxCoeff());
    if ((P - P.adjoint()).cwiseAbs().maxCoeff() > kPsdTol * scale)
        throw NumericError("Kalman covariance lost Hermitian symmetry");
    if (min_covariance_eigenvalue() < -kPsdTol * scale)
        throw NumericError("Kalman covariance is not positive semi-definite");
}

namespace {

bool is_constant(std::span<const cplx> series) {
    const cplx ref = series.back();
    const double tol = 1e-12 * std::max(std::abs(ref), 1e-300);
    for (const auto &x : series)
        if (std::abs(x - ref) > tol) return false;
    return true;
}

cplx run_filter(std::span<const cplx> history, const ARModel &model, double measurement_noise) {
    const std::size_t p = model.order();
    KalmanFilter kf(model, measurement_noise);
    kf.initialise(history.first(p), model.innovation_variance);
    for (std::size_t k = p; k < history.size(); ++k) {
        kf.predict();
        kf.update(history[k]);
    }
    kf.predict();
    return kf.predicted_measurement();
}

} // namespace

cplx kalman_predict_with_model(std::span<const cplx> history, const ARModel &model, double measurement_noise) {
    if (history.size() < model.order() + 1)
        throw ArgumentError("kalman_predict: window of " + std::to_string(history.size()) +
                            " is too short for order " + std::to_string(model.order()));
    return run_filter(history, model, measurement_noise);
}

SeriesPrediction kalman_predict_series(std::span<const cplx> history, std::size_t order, double measurement_noise,
                                       bool remove_mean) {
    if (order < 1) throw ArgumentError("kalman_predict_series: order must be >= 1");
    if (history.size() < order + 1)
        throw ArgumentError("kalman_predict_series: window of " + std::to_string(history.size()) +
                            " is too short for order " + std::to_string(order));
    SeriesPrediction out;
    if (is_constant(history)) {
        out.value = history.back();
        out.status = PredictionStatus::persistence_fallback;
        return out;
    }
    try {
        out.model = yule_walker(autocovariance(history, order, remove_mean), order);
    } catch (const DegenerateError &) {
        out.value = history.back();
        out.status = PredictionStatus::persistence_fallback;
        return out;
    }
    out.value = run_filter(history, out.model, measurement_noise);
    return out;
}

GridPrediction kf_predict_grid(std::span<const chan::SlotGrids> history, const KfConfig &config) {
    if (config.window < config.order + 1)
        throw ArgumentError("kf_predict_grid: window must exceed the AR order");
    if (history.size() < config.window)
        throw ArgumentError("kf_predict_grid: need " + std::to_string(config.window) + " history slots, got " +
                            std::to_string(history.size()));
    const auto recent = history.last(config.window);
    const std::size_t ports = recent.front().size();
    if (ports == 0) throw ArgumentError("kf_predict_grid: slot without ports");
    const std::size_t rows = recent.front().front().rows();
    const std::size_t cols = recent.front().front().cols();
    for (const auto &slot : recent) {
        if (slot.size() != ports) throw ArgumentError("kf_predict_grid: port count mismatch in history");
        for (const auto &g : slot)
            if (g.rows() != rows || g.cols() != cols) throw ArgumentError("kf_predict_grid: grid shape mismatch");
    }
    const bool noiseless = std::isinf(config.snr_db) && config.snr_db > 0;
    const double noise_ratio = noiseless ? 0.0 : std::pow(10.0, -config.snr_db / 10.0);

    GridPrediction out;
    out.grids.assign(ports, chan::ChannelGrid(rows, cols));
    std::vector<std::size_t> fallbacks(ports * rows, 0);
    parallel_for(ports * rows, config.threads, [&](std::size_t job) {
        const std::size_t port = job / rows;
        const std::size_t t = job % rows;
        std::vector<cplx> series(config.window);
        for (std::size_t f = 0; f < cols; ++f) {
            double power = 0.0;
            for (std::size_t k = 0; k < config.window; ++k) {
                series[k] = recent[k][port](t, f);
                power += std::norm(series[k]);
            }
            power /= static_cast<double>(config.window);
            const auto pred = kalman_predict_series(series, config.order, power * noise_ratio, config.remove_mean);
            out.grids[port](t, f) = pred.value;
            if (pred.status != PredictionStatus::ok) ++fallbacks[job];
        }
    });
    for (auto n : fallbacks) out.fallbacks += n;
    return out;
}

} // namespace chanpred::ark
