// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chanpred Authors

#include "chanpred/chanmodel.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "chanpred/error.hpp"
#include "chanpred/parallel.hpp"
#include "chanpred/rng.hpp"

namespace chanpred::chan {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::size_t kMaxPaths = 64;

double dot(const Vec3 &a, const Vec3 &b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Vec3 scaled(const Vec3 &v, double s) { return {v[0] * s, v[1] * s, v[2] * s}; }

double norm(const Vec3 &v) { return std::sqrt(dot(v, v)); }

} // namespace

GridSpec GridSpec::full_scale() {
    GridSpec g;
    g.num_subcarriers = 600;
    g.num_symbols = 14;
    return g;
}

void GridSpec::validate() const {
    if (num_subcarriers < 1) throw ConfigError("grid.num_subcarriers must be >= 1");
    if (num_symbols < 1) throw ConfigError("grid.num_symbols must be >= 1");
    if (num_tx_ports < 1) throw ConfigError("grid.num_tx_ports must be >= 1");
    if (!(subcarrier_spacing > 0)) throw ConfigError("grid.subcarrier_spacing must be > 0");
    if (!(slot_duration > 0)) throw ConfigError("grid.slot_duration must be > 0");
    if (!(slot_period > 0)) throw ConfigError("grid.slot_period must be > 0");
    if (!(carrier_frequency > 0)) throw ConfigError("grid.carrier_frequency must be > 0");
}

double GridSpec::wavenumber() const { return kTwoPi * carrier_frequency / kSpeedOfLight; }

double GridSpec::subcarrier_offset(std::size_t f) const {
    return (static_cast<double>(f) - static_cast<double>(num_subcarriers) / 2.0) * subcarrier_spacing;
}

double GridSpec::symbol_time(std::int64_t slot_index, std::size_t symbol) const {
    return static_cast<double>(slot_index) * slot_period +
           static_cast<double>(symbol) * (slot_duration / static_cast<double>(num_symbols));
}

double GridSpec::max_offset() const {
    return static_cast<double>(num_subcarriers) / 2.0 * subcarrier_spacing;
}

void DropConfig::validate() const {
    grid.validate();
    if (min_paths < 1 || max_paths > kMaxPaths || min_paths > max_paths)
        throw ConfigError("paths range [" + std::to_string(min_paths) + ", " + std::to_string(max_paths) +
                          "] must lie within [1, 64]");
    if (!(delay_spread > 0)) throw ConfigError("paths.delay_spread must be > 0");
    if (!(speed >= 0) || !std::isfinite(speed)) throw ConfigError("speed_mps must be >= 0");
    if (!(k_factor >= 0)) throw ConfigError("paths.k_factor must be >= 0");
    if (!(arrival_concentration >= 0)) throw ConfigError("paths.arrival_concentration must be >= 0");
    if (!(arrival_elevation_spread >= 0)) throw ConfigError("paths.elevation_spread must be >= 0");
    if (!(element_spacing_wavelengths > 0)) throw ConfigError("grid.element_spacing must be > 0");
}

DropParams sample_drop(const DropConfig &config, std::uint64_t seed) {
    config.validate();
    Rng rng(seed);
    const GridSpec &grid = config.grid;
    const double k = grid.wavenumber();
    const double lambda = grid.wavelength();

    DropParams drop;
    drop.grid = grid;
    drop.rng_seed = seed;

    const std::size_t n = config.min_paths + rng.index(config.max_paths - config.min_paths + 1);

    drop.tx_position = {0.0, 0.0, 25.0};
    const double distance = rng.uniform(35.0, 300.0);
    const double bearing = rng.uniform(0.0, kTwoPi);
    drop.rx_position = {distance * std::cos(bearing), distance * std::sin(bearing), 1.5};
    const Vec3 los = {drop.rx_position[0] - drop.tx_position[0], drop.rx_position[1] - drop.tx_position[1],
                      drop.rx_position[2] - drop.tx_position[2]};
    const double los_delay = norm(los) / kSpeedOfLight;

    const double heading = rng.uniform(0.0, kTwoPi);
    drop.rx_velocity = {config.speed * std::cos(heading), config.speed * std::sin(heading), 0.0};

    const bool rician = config.k_factor > 0.0;
    const double scatter_power = rician ? 1.0 / (config.k_factor + 1.0) : 1.0;

    // Reference path at the first arrival, the others at exponential excess delays.
    std::vector<PathParams> common(n);
    double power_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        PathParams &p = common[i];
        p.relative_delay = i == 0 ? 0.0 : rng.exponential(config.delay_spread);
        p.delay = los_delay + p.relative_delay;
        p.amplitude = std::exp(-p.relative_delay / config.delay_spread);
        power_sum += p.amplitude;
        p.departure = scaled(rng.unit_vector(), k);
        const double axial = (rng.uniform() < 0.5 ? 0.0 : std::numbers::pi);
        const double azimuth = heading + 0.5 * rng.von_mises(0.0, config.arrival_concentration) + axial;
        const double elevation = rng.uniform(-config.arrival_elevation_spread, config.arrival_elevation_spread);
        p.arrival = {k * std::cos(elevation) * std::cos(azimuth), k * std::cos(elevation) * std::sin(azimuth),
                     k * std::sin(elevation)};
    }
    for (auto &p : common) p.amplitude = std::sqrt(p.amplitude / power_sum * scatter_power);
    if (rician) {
        PathParams p;
        p.delay = los_delay;
        p.amplitude = std::sqrt(config.k_factor / (config.k_factor + 1.0));
        p.departure = scaled(los, k / norm(los));
        p.arrival = scaled(p.departure, -1.0);
        common.push_back(p);
    }

    // Two polarisation groups with independent random phases; ports in a group
    // are stacked vertically.
    const std::size_t paths = common.size();
    std::vector<double> pol_phase(2 * paths);
    for (auto &ph : pol_phase) ph = rng.uniform(0.0, kTwoPi);

    const std::size_t rows = (grid.num_tx_ports + 1) / 2;
    drop.paths.resize(grid.num_tx_ports);
    for (std::size_t port = 0; port < grid.num_tx_ports; ++port) {
        const std::size_t row = port % rows;
        const std::size_t pol = port / rows;
        const Vec3 element = {0.0, 0.0, static_cast<double>(row) * config.element_spacing_wavelengths * lambda};
        auto &list = drop.paths[port];
        list = common;
        for (std::size_t i = 0; i < paths; ++i)
            list[i].static_phase = dot(list[i].departure, element) + pol_phase[pol * paths + i];
    }
    return drop;
}

std::vector<DropParams> sample_drops(const DropConfig &config, std::uint64_t seed, std::size_t count,
                                     std::size_t threads) {
    std::vector<DropParams> drops(count);
    parallel_for(count, threads, [&](std::size_t i) { drops[i] = sample_drop(config, seed + i); });
    return drops;
}

cplx channel_transfer(const DropParams &drop, std::size_t port, double f, double t) {
    if (port >= drop.paths.size())
        throw IndexError("port " + std::to_string(port) + " out of range (n_t = " +
                         std::to_string(drop.paths.size()) + ")");
    if (std::abs(f) > drop.grid.max_offset() * (1.0 + 1e-12))
        throw ArgumentError("baseband offset " + std::to_string(f) + " Hz outside the grid band");
    const double fc = drop.grid.carrier_frequency;
    cplx h{0.0, 0.0};
    for (const PathParams &p : drop.paths[port]) {
        const double phase = -kTwoPi * fc * p.delay - kTwoPi * f * p.relative_delay +
                             dot(p.departure, drop.tx_position) + dot(p.arrival, drop.rx_position) +
                             dot(p.arrival, drop.rx_velocity) * t + p.static_phase;
        h += std::polar(p.amplitude * p.antenna_gain, phase);
    }
    return h;
}

SlotGrids generate_slot(const DropParams &drop, std::int64_t slot_index) {
    if (slot_index < 0) throw ArgumentError("slot_index must be >= 0");
    const GridSpec &g = drop.grid;
    SlotGrids slot(g.num_tx_ports, ChannelGrid(g.num_symbols, g.num_subcarriers));
    for (std::size_t port = 0; port < g.num_tx_ports; ++port) {
        ChannelGrid &grid = slot[port];
        for (std::size_t t = 0; t < g.num_symbols; ++t) {
            const double time = g.symbol_time(slot_index, t);
            for (std::size_t f = 0; f < g.num_subcarriers; ++f)
                grid(t, f) = channel_transfer(drop, port, g.subcarrier_offset(f), time);
        }
    }
    return slot;
}

std::vector<SlotGrids> generate_slots(const DropParams &drop, std::int64_t first_slot, std::size_t count) {
    std::vector<SlotGrids> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) out.push_back(generate_slot(drop, first_slot + std::int64_t(k)));
    return out;
}

double coherence_time(double speed, double carrier_frequency) {
    if (!(carrier_frequency > 0)) throw ArgumentError("carrier frequency must be > 0");
    if (speed == 0.0) throw UnboundedCoherenceError();
    if (!(speed > 0)) throw ArgumentError("speed must be > 0");
    const double doppler = speed * carrier_frequency / kSpeedOfLight;
    return 9.0 / (16.0 * std::numbers::pi * doppler);
}

namespace {

// Per-lag mean inner products of one sequence, accumulated into `acc`.
void accumulate_lags(std::span<const SlotGrids> slots, std::size_t max_lag, std::vector<cplx> &acc) {
    if (slots.empty()) throw ArgumentError("temporal_autocorr: empty input");
    if (slots.size() <= max_lag)
        throw ArgumentError("temporal_autocorr: sequence length " + std::to_string(slots.size()) +
                            " must exceed max_lag " + std::to_string(max_lag));
    for (std::size_t lag = 0; lag <= max_lag; ++lag) {
        cplx sum{0.0, 0.0};
        const std::size_t pairs = slots.size() - lag;
        for (std::size_t k = 0; k < pairs; ++k) {
            const SlotGrids &a = slots[k + lag];
            const SlotGrids &b = slots[k];
            if (a.size() != b.size()) throw ArgumentError("temporal_autocorr: port count changes over time");
            for (std::size_t p = 0; p < a.size(); ++p) {
                const auto x = a[p].data();
                const auto y = b[p].data();
                if (x.size() != y.size()) throw ArgumentError("temporal_autocorr: grid shape changes over time");
                for (std::size_t i = 0; i < x.size(); ++i) sum += x[i] * std::conj(y[i]);
            }
        }
        acc[lag] += sum / static_cast<double>(pairs);
    }
}

std::vector<double> normalise(const std::vector<cplx> &acc) {
    std::vector<double> out(acc.size(), 0.0);
    const double r0 = acc[0].real();
    if (!(r0 > 0)) {
        // All-zero channel: define as fully correlated.
        std::fill(out.begin(), out.end(), 1.0);
        return out;
    }
    for (std::size_t l = 0; l < acc.size(); ++l) out[l] = std::abs(acc[l]) / r0;
    out[0] = 1.0;
    return out;
}

} // namespace

std::vector<double> temporal_autocorr(std::span<const SlotGrids> slots, std::size_t max_lag) {
    std::vector<cplx> acc(max_lag + 1);
    accumulate_lags(slots, max_lag, acc);
    return normalise(acc);
}

std::vector<double> temporal_autocorr(std::span<const std::vector<SlotGrids>> sequences, std::size_t max_lag) {
    if (sequences.empty()) throw ArgumentError("temporal_autocorr: empty input");
    std::vector<cplx> acc(max_lag + 1);
    for (const auto &seq : sequences) accumulate_lags(seq, max_lag, acc);
    return normalise(acc);
}

std::size_t first_lag_below(std::span<const double> autocorr, double threshold) {
    for (std::size_t l = 0; l < autocorr.size(); ++l)
        if (autocorr[l] < threshold) return l;
    return 0;
}

} // namespace chanpred::chan
