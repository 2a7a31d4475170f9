// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chanpred Authors

#include "check.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include "chanpred/dataset.hpp"
#include "chanpred/error.hpp"
#include "chanpred/nn/checkpoint.hpp"
#include "manifest.hpp"

namespace chanpred::cli {
namespace {

struct CsvSchema {
    const char *kind;
    const char *header;
    const char *types; // one letter per column: s string, n number, i integer
};

constexpr CsvSchema kCsvSchemas[] = {
    {"training-log", "epoch,train_l1,val_l1", "inn"},
    {"mae-comparison", "predictor,l1,n_windows,n_samples", "snii"},
    {"capacity-report", "mode,epsilon,rho_db,c_eps_bits,loss_pct,reduction_pct,n_samples", "snnnnni"},
    {"capacity-cdf", "mode,value,cdf", "snn"},
    {"rollout", "step,mean_l1,n_samples", "ini"},
    {"kf-baseline", "drop_id,target_slot,aged_l1,kf_l1", "iinn"},
    {"srs-trace", "snapshot_index,port,subcarrier,real,imag", "iiinn"},
};

bool is_number(const std::string &s) {
    if (s.empty()) return false;
    char *end = nullptr;
    std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size();
}

bool is_integer(const std::string &s) {
    if (s.empty()) return false;
    std::size_t i = s[0] == '-' ? 1 : 0;
    if (i == s.size()) return false;
    for (; i < s.size(); ++i)
        if (s[i] < '0' || s[i] > '9') return false;
    return true;
}

std::vector<std::string> split(const std::string &line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        cells.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return cells;
}

std::string check_csv(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::string header;
    std::getline(in, header);
    const CsvSchema *schema = nullptr;
    for (const auto &s : kCsvSchemas)
        if (header == s.header) schema = &s;
    if (!schema) throw FormatError(path.string() + ": unknown CSV header '" + header + "'");
    const std::size_t columns = std::string(schema->types).size();
    std::string line;
    std::size_t row = 1;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++row;
        const auto cells = split(line);
        if (cells.size() != columns)
            throw FormatError(path.string() + ": row " + std::to_string(row) + " has " +
                              std::to_string(cells.size()) + " columns, expected " + std::to_string(columns));
        for (std::size_t c = 0; c < columns; ++c) {
            const char t = schema->types[c];
            const bool ok = t == 's' ? !cells[c].empty() : t == 'i' ? is_integer(cells[c]) : is_number(cells[c]);
            if (!ok)
                throw FormatError(path.string() + ": row " + std::to_string(row) + " column '" +
                                  split(schema->header)[c] + "' has invalid value '" + cells[c] + "'");
        }
        ++rows;
    }
    if (std::string(schema->kind) == "srs-trace") {
        std::stringstream ss;
        ss << std::ifstream(path).rdbuf();
        data::parse_trace_csv(ss.str());
    }
    return std::string(schema->kind) + " (" + std::to_string(rows) + " rows)";
}

void require_keys(const json &j, const std::filesystem::path &path, std::initializer_list<const char *> keys) {
    for (const char *k : keys)
        if (!j.contains(k)) throw FormatError(path.string() + ": missing key '" + k + "'");
}

// When the artifact sits next to its manifest, its bytes must hash to the recorded value.
void check_artifact_hash(const std::filesystem::path &manifest, const json &j) {
    const std::string name = manifest.string();
    const std::string suffix = ".manifest.json";
    const std::filesystem::path artifact = name.substr(0, name.size() - suffix.size());
    if (!std::filesystem::exists(artifact)) return;
    const std::string recorded = j.value("hash", "");
    if (file_hash(artifact) != recorded)
        throw DataError(artifact.string() + ": content hash does not match " + manifest.string());
}

std::string check_json(const std::filesystem::path &path) {
    const json j = read_json(path);
    if (!j.is_object()) throw FormatError(path.string() + ": expected a JSON object");
    const std::string format = j.value("format", "");
    if (format == "chanpred-dataset") {
        require_keys(j, path, {"version", "hash", "sample_count", "m", "rows", "cols", "ports", "drops", "lineage",
                               "layout", "source", "drop_ids"});
        lineage_of(j);
        check_artifact_hash(path, j);
        return "dataset-manifest";
    }
    if (format == "chanpred-checkpoint") {
        require_keys(j, path, {"version", "hash", "dataset_hash", "lineage", "model", "epochs", "seed"});
        lineage_of(j);
        check_artifact_hash(path, j);
        return "checkpoint-manifest";
    }
    if (format == "chanpred-trace") {
        require_keys(j, path, {"version", "hash", "lineage", "snapshots", "period_ms", "stride", "snr_db"});
        lineage_of(j);
        check_artifact_hash(path, j);
        return "trace-manifest";
    }
    if (j.contains("modes")) {
        require_keys(j, path, {"epsilon", "rho_db", "n_samples"});
        if (!j["modes"].is_array() || j["modes"].empty()) throw FormatError(path.string() + ": empty modes list");
        for (const auto &m : j["modes"])
            for (const char *k : {"mode", "c_eps_bits", "loss_pct", "reduction_pct"})
                if (!m.contains(k)) throw FormatError(path.string() + ": mode entry missing '" + k + "'");
        return "capacity-report";
    }
    if (format == "chanpred-evaluation") {
        require_keys(j, path, {"dataset_hash", "windows", "mae", "capacity"});
        return "evaluation-summary";
    }
    throw FormatError(path.string() + ": unrecognised JSON document");
}

} // namespace

std::string check_file(const std::filesystem::path &path) {
    const auto bytes = data::read_file(path);
    const std::string head(bytes.begin(), bytes.begin() + std::min<std::size_t>(bytes.size(), 4));
    if (head == "CHDS") {
        auto ds = data::decode_dataset(bytes);
        const auto manifest = manifest_path(path);
        if (std::filesystem::exists(manifest)) {
            const json j = read_json(manifest);
            if (j.value("hash", "") != hex64(fnv1a64(bytes)))
                throw DataError(path.string() + ": content hash does not match " + manifest.string());
            if (j.value("sample_count", std::size_t{0}) != ds.samples.size())
                throw DataError(path.string() + ": sample count differs from the manifest");
            attach_metadata(ds, j);
        }
        return "dataset (" + std::to_string(ds.samples.size()) + " samples)";
    }
    if (head == "CHMD") {
        const auto ckpt = nn::decode_checkpoint(bytes);
        const auto manifest = manifest_path(path);
        if (std::filesystem::exists(manifest) && read_json(manifest).value("hash", "") != hex64(fnv1a64(bytes)))
            throw DataError(path.string() + ": content hash does not match " + manifest.string());
        return "checkpoint (" + std::to_string(ckpt.parameters.size()) + " parameters)";
    }
    std::size_t i = 0;
    while (i < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[i]))) ++i;
    if (i < bytes.size() && bytes[i] == '{') return check_json(path);
    return check_csv(path);
}

} // namespace chanpred::cli
