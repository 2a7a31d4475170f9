// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chanpred Authors

#include "manifest.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "chanpred/dataset.hpp"
#include "chanpred/error.hpp"

namespace chanpred::cli {

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (auto b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string file_hash(const std::filesystem::path &path) { return hex64(fnv1a64(data::read_file(path))); }

std::filesystem::path manifest_path(const std::filesystem::path &artifact) {
    return std::filesystem::path(artifact.string() + ".manifest.json");
}

void write_json(const std::filesystem::path &path, const json &value) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    out << value.dump(2) << '\n';
    if (!out) throw DataError("failed writing " + path.string());
}

json read_json(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception &e) {
        throw DataError(path.string() + ": malformed JSON (" + e.what() + ")");
    }
}

std::vector<std::string> lineage_of(const json &manifest) {
    if (!manifest.contains("lineage") || !manifest["lineage"].is_array())
        throw DataError("manifest has no lineage list");
    std::vector<std::string> out;
    for (const auto &v : manifest["lineage"]) {
        if (!v.is_string()) throw DataError("manifest lineage entries must be strings");
        out.push_back(v.get<std::string>());
    }
    return out;
}

void check_lineage(const json &checkpoint_manifest, const json &dataset_manifest) {
    const auto trained = lineage_of(checkpoint_manifest);
    const auto evaluated = lineage_of(dataset_manifest);
    const std::set<std::string> seen(trained.begin(), trained.end());
    std::vector<std::string> shared;
    for (const auto &u : evaluated)
        if (seen.contains(u)) shared.push_back(u);
    if (checkpoint_manifest.value("dataset_hash", "") == dataset_manifest.value("hash", "-"))
        throw DataError("lineage: the evaluation dataset is the checkpoint's training dataset");
    if (!shared.empty()) {
        std::string list;
        for (std::size_t i = 0; i < std::min<std::size_t>(shared.size(), 5); ++i) list += (i ? ", " : "") + shared[i];
        if (shared.size() > 5) list += ", ...";
        throw DataError("lineage: evaluation data shares " + std::to_string(shared.size()) +
                        " source unit(s) with the training data (" + list + ")");
    }
}

void attach_metadata(data::Dataset &dataset, const json &manifest) {
    if (manifest.value("layout", "") != kDatasetLayout)
        throw DataError("manifest layout: expected '" + std::string(kDatasetLayout) + "'");
    if (!manifest.contains("drop_ids") || !manifest["drop_ids"].is_array() || manifest["drop_ids"].empty())
        throw DataError("manifest drop_ids: expected a non-empty list");
    if (manifest.value("m", std::size_t{0}) != dataset.m || manifest.value("rows", std::size_t{0}) != dataset.rows ||
        manifest.value("cols", std::size_t{0}) != dataset.cols)
        throw DataError("manifest m/rows/cols do not match the dataset header");
    const auto ports = manifest.value("ports", std::size_t{0});
    const auto drops = manifest["drop_ids"].size();
    const std::size_t n = dataset.samples.size();
    if (ports == 0 || n % (drops * ports * 2) != 0)
        throw DataError("manifest: " + std::to_string(n) + " samples do not split into " + std::to_string(drops) +
                        " drops x " + std::to_string(ports) + " ports x 2 components");
    const std::size_t per_drop = n / drops;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t within = i % per_drop;
        auto &meta = dataset.samples[i].meta;
        meta.drop_id = manifest["drop_ids"][i / per_drop].get<std::uint64_t>();
        meta.component = within % 2 ? data::Component::imag : data::Component::real;
        meta.port = static_cast<std::uint32_t>(within / 2 % ports);
        meta.target_slot = static_cast<std::int64_t>(dataset.m + within / (2 * ports));
    }
}

} // namespace chanpred::cli
