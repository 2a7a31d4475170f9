// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chanpred Authors

#include "chanpred/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace chanpred {

std::uint64_t Rng::index(std::uint64_t n) {
    if (n <= 1) return 0;
    // Rejection keeps the draw unbiased.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % n;
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // Box-Muller; 1 - u keeps the log argument in (0, 1].
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

double Rng::exponential(double mean) { return -mean * std::log(1.0 - uniform()); }

// Best & Fisher (1979) rejection sampler.
double Rng::von_mises(double mu, double kappa) {
    constexpr double pi = std::numbers::pi;
    if (kappa < 1e-8) return mu + uniform(-pi, pi);
    const double tau = 1.0 + std::sqrt(1.0 + 4.0 * kappa * kappa);
    const double rho = (tau - std::sqrt(2.0 * tau)) / (2.0 * kappa);
    const double r = (1.0 + rho * rho) / (2.0 * rho);
    for (;;) {
        const double u1 = uniform();
        const double u2 = 1.0 - uniform();
        const double u3 = uniform();
        const double z = std::cos(pi * u1);
        const double f = (1.0 + r * z) / (r + z);
        const double c = kappa * (r - f);
        if (c * (2.0 - c) - u2 > 0.0 || std::log(c / u2) + 1.0 - c >= 0.0) {
            const double theta = std::acos(std::clamp(f, -1.0, 1.0));
            return std::remainder(mu + (u3 < 0.5 ? -theta : theta), 2.0 * pi);
        }
    }
}

std::complex<double> Rng::complex_normal(double variance) {
    const double s = std::sqrt(variance / 2.0);
    const double re = normal();
    const double im = normal();
    return {s * re, s * im};
}

std::array<double, 3> Rng::unit_vector() {
    const double z = uniform(-1.0, 1.0);
    const double phi = uniform(0.0, 2.0 * std::numbers::pi);
    const double rxy = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {rxy * std::cos(phi), rxy * std::sin(phi), z};
}

} // namespace chanpred
