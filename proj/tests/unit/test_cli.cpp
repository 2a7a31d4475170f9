// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chanpred Authors

#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "chanpred/dataset.hpp"
#include "chanpred/error.hpp"
#include "commands.hpp"
#include "config.hpp"
#include "manifest.hpp"

using namespace chanpred;
using namespace chanpred::cli;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string &name) : path(fs::temp_directory_path() / ("chanpred_cli_" + name)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string &f) const { return (path / f).string(); }
};

void write(const std::string &path, const std::string &text) { std::ofstream(path) << text; }

std::string slurp(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const char *kSmall = R"(seed = 5

[grid]
subcarriers = 16
symbols = 2
tx_ports = 2

[drops]
count = 2
slots = 10

[dataset]
m = 4

[model]
depth = 3
base_channels = 4
epochs = 2
batch_size = 8

[kf]
window = 6
)";

double csv_value(const std::string &text, std::size_t row, std::size_t col) {
    std::istringstream in(text);
    std::string line;
    for (std::size_t r = 0; r <= row; ++r) std::getline(in, line);
    std::istringstream cells(line);
    std::string cell;
    for (std::size_t c = 0; c <= col; ++c) std::getline(cells, cell, ',');
    return std::stod(cell);
}

} // namespace

TEST_CASE("generate: sample count and coherence time in the manifest", "[cli]") {
    TempDir dir("generate");
    write(dir / "c.ini", kSmall);
    const auto r = run({"generate", "--config", dir / "c.ini", "--out", dir / "d.chds"});
    REQUIRE(r.code == 0);
    const auto j = read_json(dir / "d.chds.manifest.json");
    const std::size_t ports = 2;
    CHECK(j["sample_count"].get<std::size_t>() == 2 * (10 - 5 + 1) * ports * 2);
    // 15 km/h at 3.5 GHz are the defaults.
    CHECK_THAT(j["coherence_time_ms"].get<double>(), WithinAbs(3.68, 0.01));
    CHECK(j["lineage"] == json::array({"drop:5", "drop:6"}));
    CHECK(data::read_dataset(dir / "d.chds").samples.size() == j["sample_count"].get<std::size_t>());
}

TEST_CASE("generate: reruns are byte-identical, seeds change the data", "[cli]") {
    TempDir dir("determinism");
    write(dir / "c.ini", kSmall);
    REQUIRE(run({"generate", "--config", dir / "c.ini", "--out", dir / "a.chds"}).code == 0);
    REQUIRE(run({"generate", "--config", dir / "c.ini", "--out", dir / "b.chds", "--threads", "2"}).code == 0);
    REQUIRE(run({"generate", "--config", dir / "c.ini", "--seed", "9", "--out", dir / "c.chds"}).code == 0);
    CHECK(slurp(dir / "a.chds") == slurp(dir / "b.chds"));
    CHECK(slurp(dir / "a.chds") != slurp(dir / "c.chds"));
}

TEST_CASE("generate: a static user has no coherence time", "[cli]") {
    TempDir dir("static");
    std::string text = kSmall;
    text.replace(text.find("slots = 10"), 10, "slots = 10\nspeed_kmh = 0");
    write(dir / "c.ini", text);
    REQUIRE(run({"generate", "--config", dir / "c.ini", "--out", dir / "d.chds"}).code == 0);
    CHECK(read_json(dir / "d.chds.manifest.json")["coherence_time_ms"].is_null());
}

TEST_CASE("config errors name the key path and exit 1", "[cli]") {
    TempDir dir("config");
    write(dir / "bad.ini", "[grid]\nsubcarier = 16\n");
    auto r = run({"generate", "--config", dir / "bad.ini", "--out", dir / "d.chds"});
    CHECK(r.code == 1);
    CHECK_THAT(r.err, ContainsSubstring("grid.subcarier"));

    write(dir / "bad.ini", "[gird]\nsubcarriers = 16\n");
    r = run({"generate", "--config", dir / "bad.ini", "--out", dir / "d.chds"});
    CHECK(r.code == 1);
    CHECK_THAT(r.err, ContainsSubstring("gird"));

    write(dir / "bad.ini", "[model]\ndepth = three\n");
    r = run({"generate", "--config", dir / "bad.ini", "--out", dir / "d.chds"});
    CHECK(r.code == 1);
    CHECK_THAT(r.err, ContainsSubstring("model.depth"));

    write(dir / "bad.ini", "[model]\ndepth = 9\n");
    r = run({"generate", "--config", dir / "bad.ini", "--out", dir / "d.chds"});
    CHECK(r.code == 1);
    CHECK_THAT(r.err, ContainsSubstring("model.depth"));

    CHECK(run({"generate", "--config", dir / "missing.ini", "--out", dir / "d.chds"}).code == 1);
    CHECK(run({"generate", "--bogus"}).code == 1);
    CHECK(run({}).code == 1);
    CHECK(run({"--help"}).code == 0);
    CHECK(run({"generate"}).code == 1); // no --out
}

TEST_CASE("config: format and parse round trip", "[cli]") {
    ExperimentConfig c = parse_config(kSmall);
    c.drops.speed = 30 / 3.6;
    c.kf.remove_mean = true;
    c.model.variant = nn::Variant::image_completion;
    c.model.arch = nn::Arch::ae;
    c.train.learning_rate = 1e-3f;
    const auto text = format_config(c);
    const auto back = parse_config(text);
    CHECK(format_config(back) == text);
    CHECK(back.drops.grid == c.drops.grid);
    CHECK(back.model.variant == c.model.variant);
    CHECK(back.model.arch == c.model.arch);
    CHECK(back.train.learning_rate == c.train.learning_rate);
    CHECK(back.kf.remove_mean);
    CHECK(back.m == 4);
    CHECK(format_config(parse_config("")) == format_config(ExperimentConfig{}));
}

TEST_CASE("shipped configs validate", "[cli]") {
    std::size_t n = 0;
    for (const auto &e : fs::directory_iterator(CHANPRED_CONFIG_DIR)) {
        if (e.path().extension() != ".ini") continue;
        INFO(e.path().string());
        CHECK_NOTHROW(validate(load_config(e.path())));
        ++n;
    }
    CHECK(n >= 3);
}

TEST_CASE("config: duplicate keys and inline comments are rejected", "[cli]") {
    CHECK_THROWS_AS(parse_config("seed = 1\nseed = 2\n"), ConfigError);
    CHECK_THROWS_WITH(parse_config("[kf]\norder = 4 # lag\n"), ContainsSubstring("kf.order"));
    CHECK(parse_config("# comment\n[kf]\n; also a comment\norder = 3\n").kf.order == 3);
}

TEST_CASE("train, evaluate, rollout, kf-baseline end to end", "[cli]") {
    TempDir dir("pipeline");
    write(dir / "c.ini", kSmall);
    const std::string cfg = dir / "c.ini";
    REQUIRE(run({"generate", "--config", cfg, "--out", dir / "train.chds"}).code == 0);
    REQUIRE(run({"generate", "--config", cfg, "--seed", "50", "--out", dir / "eval.chds"}).code == 0);

    auto r = run({"train", "--config", cfg, "--data", dir / "train.chds", "--out", dir / "m.ckpt", "--check"});
    REQUIRE(r.code == 0);
    CHECK_THAT(r.out, ContainsSubstring("check "));
    CHECK_THAT(r.err, ContainsSubstring("epoch 2/2"));
    const auto manifest = read_json(dir / "m.ckpt.manifest.json");
    CHECK(manifest["lineage"] == read_json(dir / "train.chds.manifest.json")["lineage"]);
    CHECK(manifest["train"]["val_samples"].get<std::size_t>() == 24); // one of the two drops

    r = run({"evaluate", "--config", cfg, "--data", dir / "eval.chds", "--checkpoint", dir / "m.ckpt", "--kf",
             "--report-dir", dir / "rep", "--check"});
    REQUIRE(r.code == 0);
    const auto mae = slurp(dir / "rep/mae_comparison.csv");
    CHECK_THAT(mae, ContainsSubstring("predictor,l1,n_windows,n_samples\naged,"));
    CHECK_THAT(mae, ContainsSubstring("\nkf,"));
    CHECK_THAT(mae, ContainsSubstring("\nm,"));
    const auto summary = read_json(dir / "rep/evaluation.json");
    CHECK(summary["capacity"]["modes"].size() == 4);
    const double model_l1 = summary["mae"]["models"]["m"].get<double>();

    // A second run reproduces every report byte for byte.
    REQUIRE(run({"evaluate", "--config", cfg, "--data", dir / "eval.chds", "--checkpoint", dir / "m.ckpt", "--kf",
                 "--report-dir", dir / "rep2"})
                .code == 0);
    for (const char *f : {"mae_comparison.csv", "capacity_report.csv", "capacity_report.json", "capacity_cdf.csv",
                          "evaluation.json"})
        CHECK(slurp(dir / (std::string("rep/") + f)) == slurp(dir / (std::string("rep2/") + f)));

    r = run({"rollout", "--config", cfg, "--data", dir / "eval.chds", "--checkpoint", dir / "m.ckpt", "--steps", "4",
             "--out", dir / "roll.csv", "--check"});
    REQUIRE(r.code == 0);
    const auto roll = slurp(dir / "roll.csv");
    CHECK(std::count(roll.begin(), roll.end(), '\n') == 5);
    CHECK(csv_value(roll, 1, 1) == model_l1);

    r = run({"rollout", "--config", cfg, "--data", dir / "eval.chds", "--oracle", "--steps", "4", "--out",
             dir / "oracle.csv"});
    REQUIRE(r.code == 0);
    const auto oracle = slurp(dir / "oracle.csv");
    for (std::size_t s = 1; s <= 4; ++s) CHECK(csv_value(oracle, s, 1) == 0.0);

    CHECK(run({"rollout", "--config", cfg, "--data", dir / "eval.chds", "--oracle", "--steps", "5"}).code == 1);
    CHECK(run({"rollout", "--config", cfg, "--data", dir / "eval.chds", "--steps", "2"}).code == 1);

    r = run({"kf-baseline", "--config", cfg, "--data", dir / "eval.chds", "--out", dir / "kf.csv", "--check"});
    REQUIRE(r.code == 0);
    const auto kf = slurp(dir / "kf.csv");
    CHECK_THAT(kf, ContainsSubstring("drop_id,target_slot,aged_l1,kf_l1\n"));
    // Windows need kf.window = 6 slots of history and 3 more for the horizon: targets 6 of 0..9.
    CHECK(std::count(kf.begin(), kf.end(), '\n') == 1 + 2);
}

TEST_CASE("lineage: evaluating on training data exits 2", "[cli]") {
    TempDir dir("lineage");
    write(dir / "c.ini", kSmall);
    const std::string cfg = dir / "c.ini";
    REQUIRE(run({"generate", "--config", cfg, "--out", dir / "train.chds"}).code == 0);
    REQUIRE(run({"generate", "--config", cfg, "--seed", "6", "--out", dir / "overlap.chds"}).code == 0);
    REQUIRE(run({"train", "--config", cfg, "--data", dir / "train.chds", "--out", dir / "m.ckpt", "--epochs", "1"})
                .code == 0);

    auto r = run({"evaluate", "--config", cfg, "--data", dir / "train.chds", "--checkpoint", dir / "m.ckpt"});
    CHECK(r.code == 2);
    CHECK_THAT(r.err, ContainsSubstring("lineage"));
    r = run({"evaluate", "--config", cfg, "--data", dir / "overlap.chds", "--checkpoint", dir / "m.ckpt"});
    CHECK(r.code == 2);
    CHECK_THAT(r.err, ContainsSubstring("drop:6"));
}

TEST_CASE("train: zero epochs writes the initial model", "[cli]") {
    TempDir dir("epochs0");
    write(dir / "c.ini", kSmall);
    const std::string cfg = dir / "c.ini";
    REQUIRE(run({"generate", "--config", cfg, "--out", dir / "d.chds"}).code == 0);
    const auto r = run({"train", "--config", cfg, "--data", dir / "d.chds", "--out", dir / "m.ckpt", "--epochs", "0",
                        "--check"});
    REQUIRE(r.code == 0);
    CHECK(slurp(dir / "m.ckpt.train.csv") == "epoch,train_l1,val_l1\n");
    CHECK(read_json(dir / "m.ckpt.manifest.json")["epochs"] == 0);
}

TEST_CASE("exit codes for data and numeric failures", "[cli]") {
    TempDir dir("codes");
    write(dir / "c.ini", kSmall);
    const std::string cfg = dir / "c.ini";
    REQUIRE(run({"generate", "--config", cfg, "--out", dir / "d.chds"}).code == 0);

    std::string m3 = kSmall;
    m3.replace(m3.find("m = 4"), 5, "m = 3");
    write(dir / "m3.ini", m3);
    CHECK(run({"train", "--config", dir / "m3.ini", "--data", dir / "d.chds", "--out", dir / "x.ckpt"}).code == 2);

    CHECK(run({"train", "--config", cfg, "--data", dir / "absent.chds", "--out", dir / "x.ckpt"}).code == 2);

    // Tampering breaks the manifest hash.
    auto bytes = slurp(dir / "d.chds");
    bytes[bytes.size() - 1] ^= 1;
    write(dir / "t.chds", bytes);
    fs::copy_file(dir / "d.chds.manifest.json", dir / "t.chds.manifest.json");
    CHECK(run({"train", "--config", cfg, "--data", dir / "t.chds", "--out", dir / "x.ckpt"}).code == 2);
    CHECK(run({"check", dir / "t.chds"}).code == 2);

    write(dir / "junk.csv", "a,b\n1,2\n");
    CHECK(run({"check", dir / "junk.csv"}).code == 2);

    std::string diverge = kSmall;
    diverge.replace(diverge.find("epochs = 2"), 10, "epochs = 2\nlearning_rate = 1e30");
    write(dir / "lr.ini", diverge);
    const auto r = run({"train", "--config", dir / "lr.ini", "--data", dir / "d.chds", "--out", dir / "x.ckpt"});
    CHECK(r.code == 3);
    CHECK_THAT(r.err, ContainsSubstring("non-finite"));
}

TEST_CASE("trace emulate and ingest", "[cli]") {
    TempDir dir("trace");
    write(dir / "c.ini", std::string(kSmall) + "\n[trace]\nsnapshots = 40\n");
    const std::string cfg = dir / "c.ini";
    auto r = run({"trace-emulate", "--config", cfg, "--out", dir / "t.csv", "--check"});
    REQUIRE(r.code == 0);
    r = run({"trace-ingest", "--config", cfg, "--data", dir / "t.csv", "--out", dir / "t.chds", "--check"});
    REQUIRE(r.code == 0);
    const auto j = read_json(dir / "t.chds.manifest.json");
    // 16 subcarriers at stride 4 give 4 per snapshot.
    CHECK(j["cols"] == 4);
    CHECK(j["rows"] == 1);
    CHECK(j["sample_count"].get<std::size_t>() == (40 - 5 + 1) * 2 * 2);
    CHECK(j["lineage"][0].get<std::string>().starts_with("trace:"));
    CHECK(j["lineage"][1] == "drop:5");
    CHECK(run({"check", dir / "t.csv.manifest.json", dir / "t.chds"}).code == 0);

    write(dir / "broken.csv", "snapshot_index,port,subcarrier,real,imag\n0,0,0,1,2\n0,0,2,1,2\n");
    CHECK(run({"trace-ingest", "--config", cfg, "--data", dir / "broken.csv", "--out", dir / "b.chds"}).code == 2);
}
