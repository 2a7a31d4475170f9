// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chanpred Authors

#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "chanpred/chanmodel.hpp"

namespace chanpred::ark {

using cplx = std::complex<double>;

/// x_k = sum_i a_i x_{k-i} + e_k with Var(e) = innovation_variance.
struct ARModel {
    std::vector<cplx> coefficients; // a_1 .. a_p
    std::vector<cplx> reflection;   // k_1 .. k_p from Levinson-Durbin
    double innovation_variance = 0.0;
    bool stable = false; // all companion eigenvalues strictly inside the unit circle

    std::size_t order() const { return coefficients.size(); }
    // sum_i a_i h_{W+1-i} for the newest-last history.
    cplx predict_next(std::span<const cplx> history) const;
};

/// gamma(l) = (1/N) sum_k x_{k+l} conj(x_k), l = 0..max_lag. The sample mean is
/// kept unless remove_mean is set.
std::vector<cplx> autocovariance(std::span<const cplx> series, std::size_t max_lag, bool remove_mean = false);

/// Solves the Hermitian-Toeplitz Yule-Walker system by Levinson-Durbin.
/// Throws DegenerateError when gamma(0) <= 0 or a reflection coefficient reaches
/// the unit circle.
ARModel yule_walker(std::span<const cplx> gamma, std::size_t order);

bool companion_stable(std::span<const cplx> coefficients);

/// Companion-form Kalman filter over the state [h_k, h_{k-1}, ..., h_{k-p+1}].
class KalmanFilter {
public:
    KalmanFilter(const ARModel &model, double measurement_noise);

    // Seeds the state with the oldest-first observations and sets P = P0_scale * I.
    void initialise(std::span<const cplx> oldest_first, double p0_scale);
    void predict();
    void update(cplx measurement);

    cplx predicted_measurement() const { return state_[0]; }
    std::span<const cplx> state() const { return state_; }
    // Row-major p x p covariance.
    std::span<const cplx> covariance() const { return cov_; }
    std::size_t order() const { return order_; }

    // Re-checks Hermitian PSD after every update (tolerance 1e-9); throws NumericError.
    void set_check_covariance(bool on) { check_ = on; }
    // Smallest eigenvalue of the Hermitian part of P.
    double min_covariance_eigenvalue() const;

private:
    void check_covariance() const;

    std::size_t order_;
    std::vector<cplx> coeffs_;
    double process_noise_;
    double measurement_noise_;
    std::vector<cplx> state_;
    std::vector<cplx> cov_;
    bool check_ = false;
};

enum class PredictionStatus { ok, persistence_fallback };

struct SeriesPrediction {
    cplx value;
    PredictionStatus status = PredictionStatus::ok;
    ARModel model; // empty on fallback
};

/// Fits AR(p) on the window and runs the filter through it; returns the
/// a-priori prediction for the next step. A degenerate fit (including a
/// constant window) falls back to persistence with the fallback status.
SeriesPrediction kalman_predict_series(std::span<const cplx> history, std::size_t order,
                                       double measurement_noise, bool remove_mean = false);

// Same filter with a caller-supplied model; no fitting.
cplx kalman_predict_with_model(std::span<const cplx> history, const ARModel &model, double measurement_noise);

struct KfConfig {
    std::size_t order = 4;    // p, tied to the memory size m
    std::size_t window = 15;  // W past observations per fit
    double snr_db = 30.0;     // R = mean window power / 10^(snr/10); +inf gives R = 0
    bool remove_mean = false;
    std::size_t threads = 1;
};

struct GridPrediction {
    chan::SlotGrids grids;
    std::size_t fallbacks = 0;
};

/// Per-pixel (port, t, f) prediction of the slot after the last history entry,
/// using the most recent `window` slots.
GridPrediction kf_predict_grid(std::span<const chan::SlotGrids> history, const KfConfig &config = {});

} // namespace chanpred::ark
