// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chanpred Authors

#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <random>

namespace chanpred {

/// Deterministic random source. The engine is std::mt19937_64 (bit-exact by the
/// standard); the distribution transforms are implemented here because the
/// std:: distributions are implementation-defined, and drops must reproduce
/// bit for bit on every toolchain.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    std::uint64_t index(std::uint64_t n);

    double normal();
    double exponential(double mean);
    double von_mises(double mu, double kappa);
    std::complex<double> complex_normal(double variance);
    std::array<double, 3> unit_vector();

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace chanpred
