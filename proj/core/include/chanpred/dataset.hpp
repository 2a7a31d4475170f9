// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chanpred Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "chanpred/chanmodel.hpp"

namespace chanpred::data {

enum class Component : std::uint8_t { real = 0, imag = 1 };

const char *to_string(Component c);

struct SampleMeta {
    std::uint64_t drop_id = 0;
    std::uint32_t port = 0;
    Component component = Component::real;
    std::int64_t target_slot = 0; // slot index of h_{k+1}

    friend bool operator==(const SampleMeta &, const SampleMeta &) = default;
};

/// m + 1 consecutive T x F images of one real-valued channel component,
/// normalised jointly by `scale` (the largest absolute pixel before scaling).
/// States are stored oldest first; the last one is the prediction target.
struct Sample {
    std::size_t m = 0;
    std::size_t rows = 0; // T
    std::size_t cols = 0; // F
    float scale = 1.0f;
    std::vector<float> pixels; // (m + 1) * T * F, state-major then row-major
    SampleMeta meta;

    std::size_t image_size() const { return rows * cols; }
    std::span<const float> state(std::size_t i) const { return {pixels.data() + i * image_size(), image_size()}; }
    std::span<float> state(std::size_t i) { return {pixels.data() + i * image_size(), image_size()}; }
    std::span<const float> conditioning() const { return {pixels.data(), m * image_size()}; }
    std::span<const float> target() const { return state(m); }

    friend bool operator==(const Sample &, const Sample &) = default;
};

/// Divides every pixel of `raw` ((m + 1) * T * F values) by the joint maximum
/// absolute value. An all-zero input keeps scale 1. Throws DataError on NaN/Inf.
Sample normalize(std::span<const float> raw, std::size_t m, std::size_t rows, std::size_t cols);
std::vector<float> denormalize(const Sample &sample);

/// Sliding windows of m + 1 slots (stride 1). Samples are ordered window-major,
/// then port, then component (real before imag).
std::vector<Sample> build_samples(std::span<const chan::SlotGrids> slots, std::size_t m,
                                  std::uint64_t drop_id = 0, std::int64_t first_slot = 0);

// Number of samples build_samples yields for the given sequence geometry.
std::size_t samples_per_sequence(std::size_t num_slots, std::size_t m, std::size_t ports);

/// In-memory image of a CHDS file.
struct Dataset {
    std::uint32_t m = 4;
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    std::vector<Sample> samples;

    friend bool operator==(const Dataset &, const Dataset &) = default;
};

inline constexpr std::uint32_t kDatasetVersion = 1;

// Little-endian layout: "CHDS", u32 version, u32 m, u32 T, u32 F, u64 count,
// then per sample f32 scale followed by (m + 1) * T * F f32 pixels.
std::vector<std::uint8_t> encode_dataset(const Dataset &dataset);
Dataset decode_dataset(std::span<const std::uint8_t> bytes);

void write_dataset(const Dataset &dataset, const std::filesystem::path &path);
Dataset read_dataset(const std::filesystem::path &path);

std::vector<std::uint8_t> read_file(const std::filesystem::path &path);
void write_file(const std::filesystem::path &path, std::span<const std::uint8_t> bytes);

/// Periodic single-symbol sounding snapshots on a decimated subcarrier set.
struct SrsTrace {
    double period = 5e-3;        // s
    std::size_t stride = 4;      // every stride-th subcarrier
    double snr_db = 30.0;
    std::vector<chan::SlotGrids> snapshots; // [snapshot][port], each 1 x F'

    std::size_t num_ports() const { return snapshots.empty() ? 0 : snapshots.front().size(); }
    std::size_t num_subcarriers() const;
};

inline constexpr double kNoiseless = std::numeric_limits<double>::infinity();

/// Snapshot j samples the drop at t = j * period on subcarriers 0, stride, 2 * stride, ...
/// and adds circularly-symmetric Gaussian noise of variance (mean signal power) / 10^(snr/10).
/// snr_db = +inf disables the noise.
SrsTrace emulate_srs_trace(const chan::DropParams &drop, std::size_t num_snapshots, double period = 5e-3,
                           std::size_t stride = 4, double snr_db = 30.0, std::uint64_t noise_seed = 0);

// CSV columns: snapshot_index,port,subcarrier,real,imag (header row required on export,
// optional on ingest). Every (snapshot, port, subcarrier) cell must be present.
SrsTrace ingest_trace_csv(const std::filesystem::path &path, double period = 5e-3, std::size_t stride = 4,
                          double snr_db = 30.0);
SrsTrace parse_trace_csv(const std::string &text, double period = 5e-3, std::size_t stride = 4,
                         double snr_db = 30.0);
void export_trace_csv(const SrsTrace &trace, const std::filesystem::path &path);
std::string format_trace_csv(const SrsTrace &trace);

} // namespace chanpred::data
