// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chanpred Authors

#include "chanpred/error.hpp"

namespace chanpred {

const char *to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::config: return "config";
    case ErrorKind::index: return "index";
    case ErrorKind::argument: return "argument";
    case ErrorKind::data: return "data";
    case ErrorKind::format: return "format";
    case ErrorKind::shape: return "shape";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::degenerate: return "degenerate";
    }
    return "unknown";
}

} // namespace chanpred
