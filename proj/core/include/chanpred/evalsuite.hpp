// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chanpred Authors

#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace chanpred::eval {

using cplx = std::complex<double>;

enum class CsiMode { perfect, aged, predicted_dl, predicted_kf };

const char *to_string(CsiMode mode);

/// Mean absolute difference over all values (normalised domain).
double mae_report(std::span<const float> pred, std::span<const float> truth);

/// One antenna port's normalised real and imaginary images with their scales.
struct PortImages {
    std::span<const float> real;
    float real_scale = 1.0f;
    std::span<const float> imag;
    float imag_scale = 1.0f;
};

/// c_p = complex(real_p[t][f] * real_scale, imag_p[t][f] * imag_scale).
std::vector<cplx> assemble_csi_vector(std::span<const PortImages> ports, std::size_t cols, std::size_t t,
                                      std::size_t f);

/// Unit-norm maximum ratio transmission: w = conj(c) / ||c||.
std::vector<cplx> mrt_precoder(std::span<const cplx> c);

/// log2(1 + rho |c . w|^2) with c . w = sum_p c_p w_p.
double instantaneous_capacity(std::span<const cplx> c_true, std::span<const cplx> w, double rho);

/// Lower empirical quantile: sorted[ceil(eps n) - 1].
double outage_capacity(std::span<const double> samples, double epsilon);

double db_to_linear(double db);

struct ModeEstimate {
    CsiMode mode;
    std::vector<cplx> vectors; // element-major, `ports` entries per element
};

struct ModeCapacity {
    CsiMode mode;
    double c_eps = 0.0;
    std::vector<double> samples; // per-element capacity, population order
};

/// Only capacities are stored; the percentages are recomputed on every call.
struct CapacityReport {
    double rho_db = 10.0;
    double epsilon = 0.1;
    std::size_t n_samples = 0;
    std::vector<ModeCapacity> modes;

    bool has(CsiMode mode) const;
    double capacity(CsiMode mode) const;
    // 100 (C_perfect - C_mode) / C_perfect
    double loss_pct(CsiMode mode) const;
    // 100 (C_mode - C_aged) / (C_perfect - C_aged); NaN when the denominator is 0
    double reduction_pct(CsiMode mode) const;

    // Columns: mode,epsilon,rho_db,c_eps_bits,loss_pct,reduction_pct,n_samples
    std::string to_csv() const;
    std::string to_json() const;
    // Columns: mode,value,cdf (empirical CDF i/n over the sorted samples)
    std::string cdf_csv() const;
};

/// Scores every mode's MRT precoder against the ground truth at each element.
/// The perfect mode is derived from `truth` and always included; aged and
/// predicted modes come from `estimates`.
CapacityReport compare_csi_modes(std::span<const cplx> truth, std::span<const ModeEstimate> estimates,
                                 std::size_t ports, double rho_db, double epsilon);

} // namespace chanpred::eval
