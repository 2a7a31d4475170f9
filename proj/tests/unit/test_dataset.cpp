// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chanpred Authors

#include <catch_amalgamated.hpp>

#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "chanpred/dataset.hpp"
#include "chanpred/error.hpp"
#include "chanpred/rng.hpp"

using namespace chanpred;
using namespace chanpred::data;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

std::vector<chan::SlotGrids> short_sequence(std::size_t slots, std::uint64_t seed = 7) {
    chan::DropConfig c;
    c.grid.num_subcarriers = 16;
    c.grid.num_symbols = 4;
    c.grid.num_tx_ports = 2;
    return chan::generate_slots(chan::sample_drop(c, seed), 0, slots);
}

Sample random_sample(Rng &rng, std::size_t m, std::size_t rows, std::size_t cols) {
    std::vector<float> raw((m + 1) * rows * cols);
    for (auto &v : raw) v = static_cast<float>(rng.uniform(-3.0, 3.0));
    return normalize(raw, m, rows, cols);
}

std::filesystem::path temp_path(const std::string &name) {
    return std::filesystem::temp_directory_path() / ("chanpred_test_" + name);
}

} // namespace

TEST_CASE("sample counts follow the sliding window") {
    const auto seq5 = short_sequence(5);
    CHECK(build_samples(seq5, 4).size() == 1 * 2 * 2);
    const auto seq8 = short_sequence(8);
    const auto s = build_samples(seq8, 4, 11, 100);
    CHECK(s.size() == 4 * 2 * 2);
    CHECK(samples_per_sequence(8, 4, 2) == s.size());
    CHECK(samples_per_sequence(10, 4, 8) == (10 - 5 + 1) * 8 * 2);
    CHECK(s[0].meta.drop_id == 11);
    CHECK(s[0].meta.target_slot == 104);
    CHECK(s[1].meta.component == Component::imag);
    CHECK(s[2].meta.port == 1);
    CHECK(s.back().meta.target_slot == 107);
    CHECK_THROWS_AS(build_samples(short_sequence(4), 4), ArgumentError);
}

TEST_CASE("overlapping windows share states before normalisation") {
    const auto seq = short_sequence(9);
    const auto s = build_samples(seq, 4);
    const std::size_t per_window = 2 * 2;
    for (std::size_t w = 0; w + 1 < 5; ++w)
        for (std::size_t k = 0; k < per_window; ++k) {
            const auto raw_a = denormalize(s[w * per_window + k]);
            const auto raw_b = denormalize(s[(w + 1) * per_window + k]);
            const std::size_t img = s[0].image_size();
            for (std::size_t i = 1; i <= 4; ++i)
                for (std::size_t p = 0; p < img; ++p)
                    REQUIRE_THAT(raw_a[i * img + p], WithinAbs(raw_b[(i - 1) * img + p], 1e-6));
        }
}

TEST_CASE("sample pixels are the channel components") {
    const auto seq = short_sequence(5);
    const auto s = build_samples(seq, 4);
    const auto raw_re = denormalize(s[2]); // port 1 real
    const auto raw_im = denormalize(s[3]);
    const std::size_t img = s[0].image_size();
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t p = 0; p < img; ++p) {
            const auto h = seq[i][1].data()[p];
            REQUIRE(std::abs(raw_re[i * img + p] - static_cast<float>(h.real())) <= 1e-6f);
            REQUIRE(std::abs(raw_im[i * img + p] - static_cast<float>(h.imag())) <= 1e-6f);
        }
}

TEST_CASE("normalize definition and degenerate input") {
    std::vector<float> raw(2 * 2, 0.0f);
    raw[0] = 4.0f;
    raw[1] = -2.0f;
    const auto s = normalize(raw, 1, 1, 2);
    CHECK(s.scale == 4.0f);
    CHECK(s.pixels[1] == -0.5f);

    const auto z = normalize(std::vector<float>(4, 0.0f), 1, 1, 2);
    CHECK(z.scale == 1.0f);
    for (float v : z.pixels) CHECK(v == 0.0f);

    raw[2] = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_AS(normalize(raw, 1, 1, 2), DataError);
    raw[2] = std::numeric_limits<float>::infinity();
    CHECK_THROWS_AS(normalize(raw, 1, 1, 2), DataError);
    CHECK_THROWS_AS(normalize(raw, 2, 1, 2), ArgumentError);
}

TEST_CASE("normalised samples peak at exactly one and round trip within one ulp") {
    Rng rng(12);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<float> raw(5 * 3 * 4);
        for (auto &v : raw) v = static_cast<float>(rng.normal() * std::pow(10.0, rng.uniform(-6, 6)));
        const auto s = normalize(raw, 4, 3, 4);
        float peak = 0.0f;
        for (float v : s.pixels) {
            REQUIRE(std::abs(v) <= 1.0f);
            peak = std::max(peak, std::abs(v));
        }
        CHECK(peak == 1.0f);
        const auto back = denormalize(s);
        for (std::size_t i = 0; i < raw.size(); ++i) {
            const float tol = std::abs(std::nextafter(raw[i], 2 * raw[i] + 1.0f) - raw[i]);
            REQUIRE(std::abs(back[i] - raw[i]) <= tol);
        }
    }
}

TEST_CASE("dataset encoding round trips bitwise") {
    Rng rng(3);
    Dataset d;
    d.m = 4;
    d.rows = 3;
    d.cols = 5;
    for (int i = 0; i < 3; ++i) d.samples.push_back(random_sample(rng, 4, 3, 5));
    d.samples[1].pixels[0] = 1.0f;
    d.samples[1].pixels[1] = -1.0f;
    d.samples[2].pixels[3] = -0.0f;
    const auto bytes = encode_dataset(d);
    CHECK(bytes.size() == 28 + 3 * (1 + 5 * 3 * 5) * 4);
    const auto back = decode_dataset(bytes);
    REQUIRE(back.samples.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(std::bit_cast<std::uint32_t>(back.samples[i].scale) == std::bit_cast<std::uint32_t>(d.samples[i].scale));
        for (std::size_t p = 0; p < d.samples[i].pixels.size(); ++p)
            REQUIRE(std::bit_cast<std::uint32_t>(back.samples[i].pixels[p]) ==
                    std::bit_cast<std::uint32_t>(d.samples[i].pixels[p]));
    }
    CHECK(encode_dataset(back) == bytes);

    const auto path = temp_path("roundtrip.chds");
    write_dataset(d, path);
    CHECK(read_file(path) == bytes);
    CHECK(read_dataset(path).samples.size() == 3);
    std::filesystem::remove(path);
}

TEST_CASE("randomised dataset round trips") {
    Rng rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        Dataset d;
        d.m = static_cast<std::uint32_t>(1 + rng.index(5));
        d.rows = static_cast<std::uint32_t>(1 + rng.index(4));
        d.cols = static_cast<std::uint32_t>(1 + rng.index(9));
        const std::size_t n = rng.index(6);
        for (std::size_t i = 0; i < n; ++i) d.samples.push_back(random_sample(rng, d.m, d.rows, d.cols));
        const auto bytes = encode_dataset(d);
        const auto back = decode_dataset(bytes);
        CHECK(encode_dataset(back) == bytes);
        CHECK(back.m == d.m);
        CHECK(back.samples.size() == n);
    }
}

TEST_CASE("malformed dataset files are rejected with the offending field") {
    Rng rng(5);
    Dataset d;
    d.m = 1;
    d.rows = 2;
    d.cols = 2;
    d.samples.push_back(random_sample(rng, 1, 2, 2));
    d.samples.push_back(random_sample(rng, 1, 2, 2));
    const auto good = encode_dataset(d);

    auto bad = good;
    bad[0] = 'X';
    CHECK_THROWS_WITH(decode_dataset(bad), ContainsSubstring("magic"));
    bad = good;
    bad[4] = 2;
    CHECK_THROWS_WITH(decode_dataset(bad), ContainsSubstring("version"));
    bad = good;
    bad.resize(bad.size() - 4);
    CHECK_THROWS_WITH(decode_dataset(bad), ContainsSubstring("truncated"));
    CHECK_THROWS_AS(decode_dataset(bad), FormatError);
    bad = good;
    bad.push_back(0);
    CHECK_THROWS_AS(decode_dataset(bad), FormatError);
    CHECK_THROWS_AS(decode_dataset(std::span(good).first(10)), FormatError);

    Dataset wrong = d;
    wrong.samples[0].pixels.pop_back();
    CHECK_THROWS_AS(encode_dataset(wrong), ShapeError);
}

TEST_CASE("SRS emulation geometry and noiseless subsampling") {
    chan::DropConfig c;
    c.grid = chan::GridSpec::full_scale();
    const auto drop = chan::sample_drop(c, 8);
    const auto trace = emulate_srs_trace(drop, 3, 5e-3, 4, kNoiseless);
    CHECK(trace.num_subcarriers() == 150);
    CHECK(trace.num_ports() == 8);
    CHECK(emulate_srs_trace(drop, 1, 5e-3, 7, kNoiseless).num_subcarriers() == 86);

    auto one_symbol = drop;
    one_symbol.grid.num_symbols = 1;
    one_symbol.grid.slot_period = 5e-3;
    for (std::int64_t j = 0; j < 3; ++j) {
        const auto slot = chan::generate_slot(one_symbol, j);
        for (std::size_t p = 0; p < 8; ++p)
            for (std::size_t i = 0; i < 150; ++i) REQUIRE(trace.snapshots[j][p](0, i) == slot[p](0, 4 * i));
    }
    CHECK_THROWS_AS(emulate_srs_trace(drop, 3, 5e-3, 0), ArgumentError);
    CHECK_THROWS_AS(emulate_srs_trace(drop, 0), ArgumentError);
}

TEST_CASE("SRS emulation hits the requested SNR") {
    chan::DropConfig c;
    c.grid = chan::GridSpec::full_scale();
    const auto drop = chan::sample_drop(c, 9);
    const auto clean = emulate_srs_trace(drop, 100, 5e-3, 4, kNoiseless);
    const auto noisy = emulate_srs_trace(drop, 100, 5e-3, 4, 30.0, 77);
    double signal = 0.0, noise = 0.0;
    std::size_t n = 0;
    for (std::size_t j = 0; j < 100; ++j)
        for (std::size_t p = 0; p < 8; ++p)
            for (std::size_t i = 0; i < 150; ++i) {
                signal += std::norm(clean.snapshots[j][p](0, i));
                noise += std::norm(noisy.snapshots[j][p](0, i) - clean.snapshots[j][p](0, i));
                ++n;
            }
    REQUIRE(n >= 100000);
    CHECK_THAT(10.0 * std::log10(signal / noise), WithinAbs(30.0, 0.2));
}

TEST_CASE("trace CSV parsing") {
    const std::string ok = "snapshot_index,port,subcarrier,real,imag\n"
                           "0,0,0,1.5,-2\n0,0,1,0,0\n0,0,2,3,4\n"
                           "1,0,0,1,1\n1,0,2,2,2\n1,0,1,5e-3,-1e2\n";
    const auto t = parse_trace_csv(ok);
    CHECK(t.snapshots.size() == 2);
    CHECK(t.num_subcarriers() == 3);
    CHECK(t.snapshots[0][0](0, 0) == chan::cplx(1.5, -2.0));
    CHECK(t.snapshots[1][0](0, 1) == chan::cplx(5e-3, -1e2));

    CHECK_THROWS_WITH(parse_trace_csv("0,0,0,1,1\n0,0,2,1,1\n"), ContainsSubstring("snapshot 0"));
    CHECK_THROWS_WITH(parse_trace_csv("0,0,0,1\n"), ContainsSubstring("row 1"));
    CHECK_THROWS_WITH(parse_trace_csv("h,p,s,r,i\n"), ContainsSubstring("row 1"));
    CHECK_THROWS_WITH(parse_trace_csv("0,0,0,1,1\n0,0,0,x,1\n"), ContainsSubstring("row 2"));
    CHECK_THROWS_AS(parse_trace_csv("0,0,0,1,1\n0,0,0,1,1\n"), DataError);
    CHECK_THROWS_AS(parse_trace_csv(""), DataError);
}

TEST_CASE("trace CSV export and ingest round trip") {
    const auto drop = chan::sample_drop(chan::DropConfig{}, 31);
    const auto trace = emulate_srs_trace(drop, 4, 5e-3, 4, 30.0, 2);
    const auto path = temp_path("trace.csv");
    export_trace_csv(trace, path);
    const auto back = ingest_trace_csv(path);
    REQUIRE(back.snapshots.size() == trace.snapshots.size());
    for (std::size_t j = 0; j < 4; ++j)
        for (std::size_t p = 0; p < trace.num_ports(); ++p) CHECK(back.snapshots[j][p] == trace.snapshots[j][p]);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(ingest_trace_csv(temp_path("does_not_exist.csv")), DataError);
}
