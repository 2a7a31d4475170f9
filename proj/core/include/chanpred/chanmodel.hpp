// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chanpred Authors

#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace chanpred::chan {

inline constexpr double kSpeedOfLight = 299792458.0;

using Vec3 = std::array<double, 3>;
using cplx = std::complex<double>;

/// OFDM time-frequency grid geometry of one slot.
///
/// Symbol i of slot k sits at k * slot_period + i * slot_duration / T. The slot
/// period defaults to the slot duration (back-to-back slots); SRS-style traces
/// use a longer period.
struct GridSpec {
    std::size_t num_subcarriers = 64;    // F
    std::size_t num_symbols = 8;         // T
    double subcarrier_spacing = 15e3;    // Hz
    double slot_duration = 1e-3;         // s
    double slot_period = 1e-3;           // s, start-to-start spacing of slots
    double carrier_frequency = 3.5e9;    // Hz
    std::size_t num_tx_ports = 8;        // n_t

    // F = 600, T = 14, 8 ports at 3.5 GHz.
    static GridSpec full_scale();

    void validate() const;
    double wavelength() const { return kSpeedOfLight / carrier_frequency; }
    double wavenumber() const;
    // Baseband offset of subcarrier f, centred on the band: (f - F/2) * spacing.
    double subcarrier_offset(std::size_t f) const;
    double symbol_time(std::int64_t slot_index, std::size_t symbol) const;
    double max_offset() const;

    friend bool operator==(const GridSpec &, const GridSpec &) = default;
};

struct PathParams {
    double delay = 0.0;          // tau_n, s
    double relative_delay = 0.0; // tau_n - min_j tau_j, s
    double amplitude = 0.0;      // a_n
    double antenna_gain = 1.0;   // a_tr
    Vec3 departure{};            // k_t,n, rad/m, norm 2 pi / lambda
    Vec3 arrival{};              // k_r,n, rad/m, norm 2 pi / lambda
    double static_phase = 0.0;   // per-port array and polarisation phase, rad

    friend bool operator==(const PathParams &, const PathParams &) = default;
};

struct DropParams {
    GridSpec grid;
    std::vector<std::vector<PathParams>> paths; // [port][path]
    Vec3 tx_position{};
    Vec3 rx_position{};
    Vec3 rx_velocity{};
    std::uint64_t rng_seed = 0;

    friend bool operator==(const DropParams &, const DropParams &) = default;
};

/// Randomisation recipe for one drop.
struct DropConfig {
    GridSpec grid;
    std::size_t min_paths = 8;
    std::size_t max_paths = 20;
    double delay_spread = 300e-9;  // mean excess delay, s
    double speed = 15.0 / 3.6;     // m/s
    double k_factor = 0.0;         // linear Rician K; 0 disables the dominant path
    // Axial von Mises concentration of arrival azimuths around the travel axis.
    double arrival_concentration = 2.0;
    double arrival_elevation_spread = 0.17453292519943295; // rad, uniform +-
    double element_spacing_wavelengths = 0.7;

    void validate() const;
};

DropParams sample_drop(const DropConfig &config, std::uint64_t seed);

// Drops seed, seed + 1, ...; identical to calling sample_drop in a loop.
std::vector<DropParams> sample_drops(const DropConfig &config, std::uint64_t seed, std::size_t count,
                                     std::size_t threads = 1);

/// H(f, t) for one transmit port at baseband offset f (Hz) and time t (s).
cplx channel_transfer(const DropParams &drop, std::size_t port, double f, double t);

/// Row-major T x F complex matrix.
class ChannelGrid {
public:
    ChannelGrid() = default;
    ChannelGrid(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    cplx &operator()(std::size_t t, std::size_t f) { return data_[t * cols_ + f]; }
    const cplx &operator()(std::size_t t, std::size_t f) const { return data_[t * cols_ + f]; }

    std::span<cplx> data() { return data_; }
    std::span<const cplx> data() const { return data_; }

    friend bool operator==(const ChannelGrid &, const ChannelGrid &) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<cplx> data_;
};

// One slot: a grid per transmit port.
using SlotGrids = std::vector<ChannelGrid>;

SlotGrids generate_slot(const DropParams &drop, std::int64_t slot_index);
std::vector<SlotGrids> generate_slots(const DropParams &drop, std::int64_t first_slot, std::size_t count);

/// 9 / (16 pi f_d) with f_d = speed * f_c / c. Throws UnboundedCoherenceError at zero speed.
double coherence_time(double speed, double carrier_frequency);

/// |R(l)| / R(0) with R(l) the mean over k of <h_{k+l}, h_k> across all ports and
/// grid elements. The overload for several sequences pools the per-lag sums.
std::vector<double> temporal_autocorr(std::span<const SlotGrids> slots, std::size_t max_lag);
std::vector<double> temporal_autocorr(std::span<const std::vector<SlotGrids>> sequences,
                                      std::size_t max_lag);

// First lag whose autocorrelation drops below the threshold, or 0 if none does.
std::size_t first_lag_below(std::span<const double> autocorr, double threshold = 0.5);

} // namespace chanpred::chan
