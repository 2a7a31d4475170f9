// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chanpred Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "chanpred/dataset.hpp"

namespace chanpred::cli {

using json = nlohmann::ordered_json;

inline constexpr int kManifestVersion = 1;

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);
std::string hex64(std::uint64_t v);
std::string file_hash(const std::filesystem::path &path);

// "<file>.manifest.json" next to the artifact.
std::filesystem::path manifest_path(const std::filesystem::path &artifact);

void write_json(const std::filesystem::path &path, const json &value);
json read_json(const std::filesystem::path &path); // DataError if missing or malformed

/// Source units a dataset was built from ("drop:<seed>" or "trace:<hash>").
std::vector<std::string> lineage_of(const json &manifest);

/// Throws DataError naming the shared units when the evaluation data overlaps
/// the data a checkpoint was trained on.
void check_lineage(const json &checkpoint_manifest, const json &dataset_manifest);

inline constexpr const char *kDatasetLayout = "drop-major; window, port, component (real, imag)";

/// CHDS files carry pixels only. Restores each sample's drop id, port,
/// component and target slot from the manifest's drop_ids, ports and m.
void attach_metadata(data::Dataset &dataset, const json &manifest);

} // namespace chanpred::cli
