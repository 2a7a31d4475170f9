// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chanpred Authors

#include "chanpred/dataset.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <tuple>

#include "chanpred/error.hpp"
#include "chanpred/rng.hpp"

namespace chanpred::data {

const char *to_string(Component c) { return c == Component::real ? "real" : "imag"; }

Sample normalize(std::span<const float> raw, std::size_t m, std::size_t rows, std::size_t cols) {
    const std::size_t expected = (m + 1) * rows * cols;
    if (expected == 0) throw ArgumentError("normalize: sample has no pixels");
    if (raw.size() != expected)
        throw ArgumentError("normalize: expected " + std::to_string(expected) + " pixels, got " +
                            std::to_string(raw.size()));
    float peak = 0.0f;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (!std::isfinite(raw[i])) throw DataError("normalize: non-finite pixel at index " + std::to_string(i));
        peak = std::max(peak, std::abs(raw[i]));
    }
    Sample s;
    s.m = m;
    s.rows = rows;
    s.cols = cols;
    s.scale = peak > 0.0f ? peak : 1.0f;
    s.pixels.resize(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) s.pixels[i] = raw[i] / s.scale;
    return s;
}

std::vector<float> denormalize(const Sample &sample) {
    std::vector<float> out(sample.pixels.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = sample.pixels[i] * sample.scale;
    return out;
}

std::size_t samples_per_sequence(std::size_t num_slots, std::size_t m, std::size_t ports) {
    if (num_slots < m + 1) return 0;
    return (num_slots - m) * ports * 2;
}

std::vector<Sample> build_samples(std::span<const chan::SlotGrids> slots, std::size_t m, std::uint64_t drop_id,
                                  std::int64_t first_slot) {
    if (m < 1) throw ArgumentError("build_samples: m must be >= 1");
    if (slots.size() < m + 1)
        throw ArgumentError("build_samples: need at least " + std::to_string(m + 1) + " slots, got " +
                            std::to_string(slots.size()));
    const std::size_t ports = slots.front().size();
    if (ports == 0) throw ArgumentError("build_samples: slot without ports");
    const std::size_t rows = slots.front().front().rows();
    const std::size_t cols = slots.front().front().cols();
    for (const auto &slot : slots) {
        if (slot.size() != ports) throw ArgumentError("build_samples: port count changes between slots");
        for (const auto &g : slot)
            if (g.rows() != rows || g.cols() != cols) throw ArgumentError("build_samples: grid shape mismatch");
    }

    const std::size_t image = rows * cols;
    std::vector<Sample> out;
    out.reserve(samples_per_sequence(slots.size(), m, ports));
    std::vector<float> raw((m + 1) * image);
    for (std::size_t w = 0; w + m < slots.size(); ++w) {
        for (std::size_t port = 0; port < ports; ++port) {
            for (Component comp : {Component::real, Component::imag}) {
                for (std::size_t s = 0; s <= m; ++s) {
                    const auto grid = slots[w + s][port].data();
                    float *dst = raw.data() + s * image;
                    for (std::size_t i = 0; i < image; ++i)
                        dst[i] = static_cast<float>(comp == Component::real ? grid[i].real() : grid[i].imag());
                }
                Sample sample = normalize(raw, m, rows, cols);
                sample.meta = {drop_id, static_cast<std::uint32_t>(port), comp,
                               first_slot + static_cast<std::int64_t>(w + m)};
                out.push_back(std::move(sample));
            }
        }
    }
    return out;
}

namespace {

constexpr char kMagic[4] = {'C', 'H', 'D', 'S'};
constexpr std::size_t kHeaderBytes = 4 + 4 * 4 + 8;

void put_u32(std::vector<std::uint8_t> &out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t> &out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t *p) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    return v;
}

std::uint64_t get_u64(const std::uint8_t *p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

} // namespace

std::vector<std::uint8_t> encode_dataset(const Dataset &dataset) {
    const std::size_t pixels = static_cast<std::size_t>(dataset.m + 1) * dataset.rows * dataset.cols;
    std::vector<std::uint8_t> out;
    out.reserve(kHeaderBytes + dataset.samples.size() * (pixels + 1) * 4);
    out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
    put_u32(out, kDatasetVersion);
    put_u32(out, dataset.m);
    put_u32(out, dataset.rows);
    put_u32(out, dataset.cols);
    put_u64(out, dataset.samples.size());
    for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
        const Sample &s = dataset.samples[i];
        if (s.pixels.size() != pixels || s.m != dataset.m || s.rows != dataset.rows || s.cols != dataset.cols)
            throw ShapeError("write_dataset: sample " + std::to_string(i) + " does not match the header layout");
        put_u32(out, std::bit_cast<std::uint32_t>(s.scale));
        for (float v : s.pixels) put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
    return out;
}

Dataset decode_dataset(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kHeaderBytes)
        throw FormatError("header truncated: expected " + std::to_string(kHeaderBytes) + " bytes, got " +
                          std::to_string(bytes.size()));
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("magic: expected \"CHDS\"");
    const std::uint8_t *p = bytes.data() + 4;
    const std::uint32_t version = get_u32(p);
    if (version != kDatasetVersion)
        throw FormatError("version: expected " + std::to_string(kDatasetVersion) + ", got " +
                          std::to_string(version));
    Dataset d;
    d.m = get_u32(p + 4);
    d.rows = get_u32(p + 8);
    d.cols = get_u32(p + 12);
    const std::uint64_t count = get_u64(p + 16);
    if (d.m < 1) throw FormatError("m: must be >= 1");
    if (d.rows < 1 || d.cols < 1) throw FormatError("T/F: must be >= 1");

    const std::uint64_t floats = static_cast<std::uint64_t>(d.m + 1) * d.rows * d.cols + 1;
    const std::uint64_t payload = bytes.size() - kHeaderBytes;
    if (count > payload / (floats * 4) + 1 || payload < count * floats * 4)
        throw FormatError("payload truncated: expected " + std::to_string(count * floats * 4) + " bytes, got " +
                          std::to_string(payload));
    if (payload != count * floats * 4)
        throw FormatError("payload: " + std::to_string(payload - count * floats * 4) + " unexpected trailing bytes");

    const std::uint8_t *q = bytes.data() + kHeaderBytes;
    d.samples.resize(count);
    for (auto &s : d.samples) {
        s.m = d.m;
        s.rows = d.rows;
        s.cols = d.cols;
        s.scale = std::bit_cast<float>(get_u32(q));
        q += 4;
        s.pixels.resize(floats - 1);
        for (float &v : s.pixels) {
            v = std::bit_cast<float>(get_u32(q));
            q += 4;
        }
    }
    return d;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path &path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed: " + path.string());
}

void write_dataset(const Dataset &dataset, const std::filesystem::path &path) {
    write_file(path, encode_dataset(dataset));
}

Dataset read_dataset(const std::filesystem::path &path) { return decode_dataset(read_file(path)); }

std::size_t SrsTrace::num_subcarriers() const {
    if (snapshots.empty() || snapshots.front().empty()) return 0;
    return snapshots.front().front().cols();
}

SrsTrace emulate_srs_trace(const chan::DropParams &drop, std::size_t num_snapshots, double period,
                           std::size_t stride, double snr_db, std::uint64_t noise_seed) {
    if (num_snapshots < 1) throw ArgumentError("emulate_srs_trace: num_snapshots must be >= 1");
    if (stride < 1) throw ArgumentError("emulate_srs_trace: subcarrier stride must be >= 1");
    if (!(period > 0)) throw ArgumentError("emulate_srs_trace: period must be > 0");

    chan::GridSpec timing = drop.grid;
    timing.slot_period = period;
    const std::size_t ports = drop.grid.num_tx_ports;
    const std::size_t sub = (drop.grid.num_subcarriers + stride - 1) / stride;

    SrsTrace trace;
    trace.period = period;
    trace.stride = stride;
    trace.snr_db = snr_db;
    trace.snapshots.assign(num_snapshots, chan::SlotGrids(ports, chan::ChannelGrid(1, sub)));
    double power = 0.0;
    for (std::size_t j = 0; j < num_snapshots; ++j) {
        const double t = timing.symbol_time(static_cast<std::int64_t>(j), 0);
        for (std::size_t p = 0; p < ports; ++p)
            for (std::size_t i = 0; i < sub; ++i) {
                const auto h = chan::channel_transfer(drop, p, drop.grid.subcarrier_offset(i * stride), t);
                trace.snapshots[j][p](0, i) = h;
                power += std::norm(h);
            }
    }
    if (std::isinf(snr_db) && snr_db > 0) return trace;

    power /= static_cast<double>(num_snapshots * ports * sub);
    const double variance = power / std::pow(10.0, snr_db / 10.0);
    Rng rng(noise_seed);
    for (auto &snap : trace.snapshots)
        for (auto &grid : snap)
            for (auto &h : grid.data()) h += rng.complex_normal(variance);
    return trace;
}

namespace {

std::vector<std::string> split_csv_line(const std::string &line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    for (auto &f : fields) {
        const auto b = f.find_first_not_of(" \t");
        const auto e = f.find_last_not_of(" \t");
        f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
    }
    return fields;
}

template <typename T>
T parse_field(const std::string &field, std::size_t row, const char *column) {
    T value{};
    const char *begin = field.data();
    const char *end = begin + field.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (field.empty() || ec != std::errc() || ptr != end)
        throw DataError("row " + std::to_string(row) + ": non-numeric field '" + field + "' in column " + column);
    return value;
}

} // namespace

SrsTrace parse_trace_csv(const std::string &text, double period, std::size_t stride, double snr_db) {
    std::istringstream in(text);
    std::string line;
    std::size_t row = 0;
    std::map<std::tuple<std::size_t, std::size_t, std::size_t>, chan::cplx> cells;
    std::size_t max_snap = 0, max_port = 0, max_sub = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        if (row == 1 && line.rfind("snapshot_index", 0) == 0) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 5)
            throw DataError("row " + std::to_string(row) + ": expected 5 fields, got " +
                            std::to_string(fields.size()));
        const auto snap = parse_field<std::size_t>(fields[0], row, "snapshot_index");
        const auto port = parse_field<std::size_t>(fields[1], row, "port");
        const auto sub = parse_field<std::size_t>(fields[2], row, "subcarrier");
        const double re = parse_field<double>(fields[3], row, "real");
        const double im = parse_field<double>(fields[4], row, "imag");
        if (!cells.emplace(std::tuple{snap, port, sub}, chan::cplx(re, im)).second)
            throw DataError("row " + std::to_string(row) + ": duplicate cell (snapshot " + std::to_string(snap) +
                            ", port " + std::to_string(port) + ", subcarrier " + std::to_string(sub) + ")");
        max_snap = std::max(max_snap, snap);
        max_port = std::max(max_port, port);
        max_sub = std::max(max_sub, sub);
    }
    if (cells.empty()) throw DataError("trace CSV has no data rows");

    SrsTrace trace;
    trace.period = period;
    trace.stride = stride;
    trace.snr_db = snr_db;
    trace.snapshots.assign(max_snap + 1, chan::SlotGrids(max_port + 1, chan::ChannelGrid(1, max_sub + 1)));
    for (std::size_t s = 0; s <= max_snap; ++s)
        for (std::size_t p = 0; p <= max_port; ++p)
            for (std::size_t f = 0; f <= max_sub; ++f) {
                auto it = cells.find({s, p, f});
                if (it == cells.end())
                    throw DataError("snapshot " + std::to_string(s) + ": missing cell (port " + std::to_string(p) +
                                    ", subcarrier " + std::to_string(f) + ")");
                trace.snapshots[s][p](0, f) = it->second;
            }
    return trace;
}

SrsTrace ingest_trace_csv(const std::filesystem::path &path, double period, std::size_t stride, double snr_db) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_trace_csv(buf.str(), period, stride, snr_db);
}

std::string format_trace_csv(const SrsTrace &trace) {
    std::string out = "snapshot_index,port,subcarrier,real,imag\n";
    char buf[128];
    for (std::size_t s = 0; s < trace.snapshots.size(); ++s)
        for (std::size_t p = 0; p < trace.snapshots[s].size(); ++p) {
            const auto &g = trace.snapshots[s][p];
            for (std::size_t f = 0; f < g.cols(); ++f) {
                std::snprintf(buf, sizeof buf, "%zu,%zu,%zu,%.17g,%.17g\n", s, p, f, g(0, f).real(),
                              g(0, f).imag());
                out += buf;
            }
        }
    return out;
}

void export_trace_csv(const SrsTrace &trace, const std::filesystem::path &path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    out << format_trace_csv(trace);
}

} // namespace chanpred::data
