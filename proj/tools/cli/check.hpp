// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chanpred Authors

#pragma once

#include <filesystem>
#include <string>

namespace chanpred::cli {

/// Re-reads an emitted file and validates it against its schema: datasets and
/// checkpoints must decode (and match their manifest hash), manifests and
/// reports must carry their required keys, CSVs must have a known header and
/// well-typed rows. Returns the detected kind; throws DataError or
/// FormatError describing the first violation.
std::string check_file(const std::filesystem::path &path);

} // namespace chanpred::cli
